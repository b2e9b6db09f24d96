#include "fingereye/page/ocr.hpp"

#include "fingereye/font.hpp"
#include "fingereye/page/fingertip.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <unistd.h>

namespace fingereye::page {

namespace {

struct Run {
  int begin, end;  // [begin, end)
};

std::vector<Run> runs(const std::vector<int>& profile, int minCount) {
  std::vector<Run> out;
  int start = -1;
  for (int i = 0; i <= static_cast<int>(profile.size()); ++i) {
    const bool on = i < static_cast<int>(profile.size()) && profile[i] >= minCount;
    if (on && start < 0) start = i;
    if (!on && start >= 0) {
      out.push_back({start, i});
      start = -1;
    }
  }
  return out;
}

constexpr double kMatchScale = 4.0;

// Best correlation of a glyph template against a white-padded patch.
double match(const cv::Mat& patch, const font::Glyph& g, double scale) {
  thread_local std::map<std::pair<char, long>, cv::Mat> cache;
  cv::Mat& tpl = cache[{g.ch, std::lround(scale * 1000)}];
  if (tpl.empty()) font::glyph_image(g, scale, 1).convertTo(tpl, CV_32F);
  cv::Mat img;
  patch.convertTo(img, CV_32F);
  const int padX = std::max(0, tpl.cols + 2 - img.cols), padY = std::max(0, tpl.rows + 2 - img.rows);
  if (padX || padY)
    cv::copyMakeBorder(img, img, padY / 2, padY - padY / 2, padX / 2, padX - padX / 2, cv::BORDER_CONSTANT,
                       cv::Scalar(255));
  cv::Mat res;
  cv::matchTemplate(img, tpl, res, cv::TM_CCOEFF_NORMED);
  double best;
  cv::minMaxLoc(res, nullptr, &best);
  return std::isfinite(best) ? best : 0.0;
}

}  // namespace

OcrResult TemplateOcr::recognize(const cv::Mat& input) const {
  OcrResult result;
  if (input.empty()) return result;
  cv::Mat gray = to_gray(input), smooth;
  cv::medianBlur(gray, smooth, 3);
  const cv::Mat ink = binarize_ink(smooth);
  if (ink.empty()) return result;

  std::vector<int> rowProfile(ink.rows, 0);
  for (int y = 0; y < ink.rows; ++y) rowProfile[y] = cv::countNonZero(ink.row(y));
  const auto bands = runs(rowProfile, std::max(1, ink.cols / 50));
  if (bands.empty()) return result;
  const Run band = *std::max_element(bands.begin(), bands.end(),
                                     [](const Run& a, const Run& b) { return a.end - a.begin < b.end - b.begin; });
  const double scale = (band.end - band.begin) / static_cast<double>(font::kRows);
  if (scale < 1.0) return result;

  const cv::Mat bandInk = ink.rowRange(band.begin, band.end);
  std::vector<int> colProfile(ink.cols, 0);
  for (int x = 0; x < ink.cols; ++x) colProfile[x] = cv::countNonZero(bandInk.col(x));
  const int pad = std::max(2, static_cast<int>(std::lround(scale / 2)));
  double total = 0.0;
  for (const Run& r : runs(colProfile, 1)) {
    const int w = r.end - r.begin;
    if (w < 0.5 * scale) continue;
    const int cols = static_cast<int>(std::lround(w / scale));
    cv::Rect box(r.begin - pad, band.begin - pad, w + 2 * pad, band.end - band.begin + 2 * pad);
    box &= cv::Rect(0, 0, gray.cols, gray.rows);
    cv::Mat patch = gray(box);
    double matchScale = scale;
    if (scale > kMatchScale) {
      cv::resize(patch, patch, {}, kMatchScale / scale, kMatchScale / scale, cv::INTER_AREA);
      matchScale = kMatchScale;
    }
    double best = -1.0;
    char bestCh = '?';
    for (const auto& g : font::recognizable_glyphs()) {
      if (std::abs(g.width - cols) > 1) continue;
      const double s = match(patch, g, matchScale);
      if (s > best) best = s, bestCh = g.ch;
    }
    if (best < 0.0) best = 0.0;
    result.text.push_back(bestCh);
    result.perCharBoxes.emplace_back(r.begin, band.begin, w, band.end - band.begin);
    total += best;
  }
  if (!result.text.empty()) result.confidence = std::clamp(total / result.text.size(), 0.0, 1.0);
  return result;
}

OcrResult ExternalOcr::recognize(const cv::Mat& gray) const {
  std::lock_guard lock(mutex_);
  static std::atomic<int> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("fingereye_ocr_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".png");
  if (!cv::imwrite(path.string(), gray)) throw Error(ErrorCode::EngineFailure, "cannot write OCR input");
  std::string cmd = command_;
  const auto pos = cmd.find("{input}");
  if (pos == std::string::npos)
    cmd += " " + path.string();
  else
    cmd.replace(pos, 7, path.string());
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(path);
    throw Error(ErrorCode::EngineFailure, "cannot start OCR command");
  }
  std::string out;
  std::array<char, 256> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = ::pclose(pipe);
  std::filesystem::remove(path);
  if (status != 0) throw Error(ErrorCode::EngineFailure, "OCR command exited with status " + std::to_string(status));
  OcrResult r;
  r.text = out.substr(0, out.find('\n'));
  while (!r.text.empty() && std::isspace(static_cast<unsigned char>(r.text.back()))) r.text.pop_back();
  r.confidence = r.text.empty() ? 0.0 : 1.0;
  return r;
}

std::unique_ptr<OcrEngine> make_ocr_engine(const std::string& spec) {
  if (spec.empty() || spec == "builtin") return std::make_unique<TemplateOcr>();
  if (spec.rfind("external:", 0) == 0) return std::make_unique<ExternalOcr>(spec.substr(9));
  throw Error(ErrorCode::InvalidArgument, "unknown OCR engine: " + spec);
}

OcrResult recognize_word(const WordCrop& crop, const OcrEngine& engine) {
  if (crop.grayPatch.empty()) throw Error(ErrorCode::InvalidArgument, "empty word crop");
  try {
    return engine.recognize(crop.grayPatch);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EngineFailure) throw;
    throw Error(ErrorCode::EngineFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::EngineFailure, e.what());
  }
}

}  // namespace fingereye::page
