#include "fingereye/sim/page.hpp"

#include "fingereye/font.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace fingereye::sim {

namespace {

double glyph_scale(const PageLayout& layout, double dpmm) { return layout.lineHeightMm * dpmm / font::kRows; }

cv::Point line_origin(const PageLayout& layout, int i, double dpmm) {
  return {static_cast<int>(std::lround(layout.marginLeftMm * dpmm)),
          static_cast<int>(std::lround(layout.line_top_mm(i) * dpmm))};
}

constexpr std::array<const char*, 40> kVocabulary = {
    "the",    "finger",  "reads",   "each",    "line",   "of",     "text",    "and",     "fingertip", "camera",
    "braille", "display", "moves",   "along",   "page",   "word",   "signal",  "down",    "up",        "track",
    "slowly", "until",   "end",     "then",    "starts", "new",    "with",    "small",   "drift",     "away",
    "from",   "center",  "users",   "follow",  "cues",   "read",   "quietly", "simple",  "paper",     "lines"};

}  // namespace

void PageLayout::validate() const {
  if (!(lineHeightMm > 0 && linePitchMm > lineHeightMm))
    throw Error(ErrorCode::InvalidArgument, "line pitch must exceed line height");
  if (!(pageWidthMm > 0 && pageHeightMm > 0 && fontSizePt > 0))
    throw Error(ErrorCode::InvalidArgument, "page dimensions must be positive");
  if (!(marginLeftMm >= 0 && marginTopMm >= 0)) throw Error(ErrorCode::InvalidArgument, "negative margin");
}

double text_width_mm(const PageLayout& layout, const std::string& text) {
  return font::text_columns(text) * layout.lineHeightMm / font::kRows;
}

std::vector<std::string> filler_text(const PageLayout& layout, int lines, double widthMm) {
  std::vector<std::string> out;
  std::size_t next = 0;
  for (int i = 0; i < lines; ++i) {
    std::string line;
    for (;;) {
      const std::string word = kVocabulary[next % kVocabulary.size()];
      const std::string candidate = line.empty() ? word : line + " " + word;
      if (text_width_mm(layout, candidate) > widthMm) break;
      line = candidate;
      ++next;
    }
    out.push_back(line);
  }
  return out;
}

PageLayout default_layout() {
  PageLayout layout;
  const int lines = static_cast<int>((layout.pageHeightMm - 2 * layout.marginTopMm) / layout.linePitchMm);
  layout.text = filler_text(layout, lines, layout.printable_width_mm());
  return layout;
}

Frame render_page(const PageLayout& layout, double dpmm) {
  layout.validate();
  if (!(dpmm > 0)) throw Error(ErrorCode::InvalidArgument, "dpmm must be positive");
  const int w = static_cast<int>(std::lround(layout.pageWidthMm * dpmm));
  const int h = static_cast<int>(std::lround(layout.pageHeightMm * dpmm));
  cv::Mat page(h, w, CV_8UC1, cv::Scalar(255));
  const double scale = glyph_scale(layout, dpmm);
  for (int i = 0; i < layout.line_count(); ++i) {
    const cv::Point o = line_origin(layout, i, dpmm);
    const int width = font::scaled(font::text_columns(layout.text[i]), scale);
    if (o.x + width > w) throw Error(ErrorCode::TextOverflow, "line " + std::to_string(i) + " exceeds page width");
    if (o.y + font::scaled(font::kRows, scale) > h)
      throw Error(ErrorCode::TextOverflow, "line " + std::to_string(i) + " exceeds page height");
    font::draw_text(page, layout.text[i], o, scale);
  }
  return Frame(page);
}

std::vector<RenderedWord> word_boxes(const PageLayout& layout, double dpmm) {
  std::vector<RenderedWord> out;
  const double scale = glyph_scale(layout, dpmm);
  for (int i = 0; i < layout.line_count(); ++i) {
    // Boxes do not depend on the target raster, so a 1x1 canvas will do.
    cv::Mat scratch(1, 1, CV_8UC1, cv::Scalar(255));
    const std::string& text = layout.text[i];
    const auto boxes = font::draw_text(scratch, text, line_origin(layout, i, dpmm), scale);
    std::size_t start = 0;
    while (start < text.size()) {
      const std::size_t end = std::min(text.find(' ', start), text.size());
      if (end > start) {
        RenderedWord word{text.substr(start, end - start), i, {}};
        for (std::size_t k = start; k < end; ++k)
          if (!boxes[k].empty()) word.bbox = word.bbox.empty() ? boxes[k] : (word.bbox | boxes[k]);
        out.push_back(word);
      }
      start = end + 1;
    }
  }
  return out;
}

}  // namespace fingereye::sim
