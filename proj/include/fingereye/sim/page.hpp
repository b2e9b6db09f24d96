#pragma once

#include "fingereye/common.hpp"

#include <string>
#include <vector>

namespace fingereye::sim {

struct PageLayout {
  double lineHeightMm = 3.0;   // cap height
  double linePitchMm = 10.0;   // center to center
  double fontSizePt = 14.0;    // nominal; the glyphs follow lineHeightMm
  double pageWidthMm = 215.9;  // US Letter
  double pageHeightMm = 279.4;
  double marginLeftMm = 20.0;
  double marginTopMm = 25.0;
  std::vector<std::string> text;

  void validate() const;
  double gap_mm() const { return linePitchMm - lineHeightMm; }
  double line_top_mm(int i) const { return marginTopMm + i * linePitchMm; }
  double line_bottom_mm(int i) const { return line_top_mm(i) + lineHeightMm; }
  /// Feedback baseline under line i: middle of the gap to line i+1.
  double baseline_mm(int i) const { return line_bottom_mm(i) + 0.5 * gap_mm(); }
  double printable_width_mm() const { return pageWidthMm - 2.0 * marginLeftMm; }
  int line_count() const { return static_cast<int>(text.size()); }
};

/// Default reading page: double-spaced lines of plain words, each filled
/// to the printable width.
PageLayout default_layout();

/// Lines of words drawn round-robin from a fixed vocabulary, each as long
/// as fits into `widthMm` at the layout's glyph size.
std::vector<std::string> filler_text(const PageLayout& layout, int lines, double widthMm);

/// Width of a string on the page in millimetres.
double text_width_mm(const PageLayout& layout, const std::string& text);

/// White page with black glyphs; cap height = lineHeightMm. 8-bit gray.
/// Throws TextOverflow when a line runs past the page edge.
Frame render_page(const PageLayout& layout, double dpmm);

struct RenderedWord {
  std::string text;
  int line = 0;
  cv::Rect bbox;  // ink box in page pixels
};

/// Ink boxes of every word on a page rendered at `dpmm`.
std::vector<RenderedWord> word_boxes(const PageLayout& layout, double dpmm);

}  // namespace fingereye::sim
