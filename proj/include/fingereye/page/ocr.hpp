#pragma once

#include "fingereye/page/word.hpp"

#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace fingereye::page {

struct OcrResult {
  std::string text;
  double confidence = 0.0;
  std::vector<cv::Rect> perCharBoxes;  // crop coordinates
};

class OcrEngine {
 public:
  virtual ~OcrEngine() = default;
  virtual OcrResult recognize(const cv::Mat& gray) const = 0;
  virtual std::string name() const = 0;
};

/// Normalized cross-correlation matcher over the embedded font. Stateless,
/// safe for concurrent calls.
class TemplateOcr : public OcrEngine {
 public:
  OcrResult recognize(const cv::Mat& gray) const override;
  std::string name() const override { return "builtin"; }
};

/// Runs an external command on a temporary PNG of the crop. `{input}` in the
/// command is replaced by the file path; the first line of stdout is the
/// text. Calls are serialized.
class ExternalOcr : public OcrEngine {
 public:
  explicit ExternalOcr(std::string commandTemplate) : command_(std::move(commandTemplate)) {}
  OcrResult recognize(const cv::Mat& gray) const override;
  std::string name() const override { return "external"; }

 private:
  std::string command_;
  mutable std::mutex mutex_;
};

/// "builtin" or "external:<command template>".
std::unique_ptr<OcrEngine> make_ocr_engine(const std::string& spec);

/// Delegates to the engine; engine exceptions surface as EngineFailure.
OcrResult recognize_word(const WordCrop& crop, const OcrEngine& engine);

}  // namespace fingereye::page
