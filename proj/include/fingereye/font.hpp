#pragma once

#include <opencv2/core.hpp>

#include <array>
#include <string_view>
#include <vector>

namespace fingereye::font {

/// Unicase 5x7 bitmap font used by the simulator and the built-in OCR.
/// Every letter and digit spans the full cap height; there are no
/// descenders. Upper and lower case share one glyph.
inline constexpr int kRows = 7;
inline constexpr int kLetterSpacing = 1;  // blank columns between glyphs

struct Glyph {
  char ch = 0;  // lower-case for letters
  int width = 0;
  std::array<std::string_view, kRows> rows{};

  bool ink(int row, int col) const { return rows[row][col] == '#'; }
};

/// nullptr when the character has no glyph. Letters match either case.
const Glyph* find_glyph(char ch);

/// Glyphs the OCR matcher may answer with (letters and digits).
const std::vector<Glyph>& recognizable_glyphs();

/// Width of `text` in font columns, spacing included.
int text_columns(std::string_view text);

/// Column boundaries in pixels for a glyph cell scaled by `scale`:
/// column c spans [round(c*scale), round((c+1)*scale)).
int scaled(int units, double scale);

/// Draws `text` in black onto an 8-bit gray or BGR image with the top-left of
/// the cap box at `origin`. Returns the ink bounding box of each character
/// (empty rects for spaces).
std::vector<cv::Rect> draw_text(cv::Mat& image, std::string_view text, cv::Point origin, double scale);

/// Standalone white raster of a glyph at `scale`, with `pad` blank pixels on
/// every side.
cv::Mat glyph_image(const Glyph& glyph, double scale, int pad = 0);

}  // namespace fingereye::font
