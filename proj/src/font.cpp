#include "fingereye/font.hpp"

#include <opencv2/imgproc.hpp>

#include <cctype>
#include <cmath>

namespace fingereye::font {

namespace {

// clang-format off
const std::vector<Glyph> kGlyphs = {
  {'a', 5, {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {'b', 5, {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
  {'c', 5, {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
  {'d', 5, {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
  {'e', 4, {"####", "#...", "#...", "###.", "#...", "#...", "####"}},
  {'f', 4, {"####", "#...", "#...", "###.", "#...", "#...", "#..."}},
  {'g', 5, {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."}},
  {'h', 5, {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
  {'i', 3, {"###", ".#.", ".#.", ".#.", ".#.", ".#.", "###"}},
  {'j', 4, {"...#", "...#", "...#", "...#", "#..#", "#..#", ".##."}},
  {'k', 5, {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
  {'l', 4, {"#...", "#...", "#...", "#...", "#...", "#...", "####"}},
  {'m', 5, {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
  {'n', 5, {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
  {'o', 5, {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {'p', 5, {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
  {'q', 5, {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
  {'r', 5, {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
  {'s', 5, {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
  {'t', 5, {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
  {'u', 5, {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
  {'v', 5, {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
  {'w', 5, {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
  {'x', 5, {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
  {'y', 5, {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
  {'z', 5, {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
  {'0', 5, {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
  {'1', 3, {".#.", "##.", ".#.", ".#.", ".#.", ".#.", "###"}},
  {'2', 5, {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
  {'3', 5, {"####.", "....#", "....#", ".###.", "....#", "....#", "####."}},
  {'4', 5, {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
  {'5', 5, {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
  {'6', 5, {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
  {'7', 5, {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
  {'8', 5, {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
  {'9', 5, {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
};

const std::vector<Glyph> kPunctuation = {
  {' ', 4, {"....", "....", "....", "....", "....", "....", "...."}},
  {'.', 1, {".", ".", ".", ".", ".", ".", "#"}},
  {',', 2, {"..", "..", "..", "..", "..", ".#", "#."}},
  {'-', 3, {"...", "...", "...", "###", "...", "...", "..."}},
  {'\'', 1, {"#", "#", ".", ".", ".", ".", "."}},
  {'!', 1, {"#", "#", "#", "#", "#", ".", "#"}},
  {'?', 5, {".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."}},
  {':', 1, {".", "#", ".", ".", ".", "#", "."}},
  {';', 2, {"..", ".#", "..", "..", "..", ".#", "#."}},
};
// clang-format on

}  // namespace

const Glyph* find_glyph(char ch) {
  const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (const auto& g : kGlyphs)
    if (g.ch == lower) return &g;
  for (const auto& g : kPunctuation)
    if (g.ch == ch) return &g;
  return nullptr;
}

const std::vector<Glyph>& recognizable_glyphs() { return kGlyphs; }

int text_columns(std::string_view text) {
  int cols = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const Glyph* g = find_glyph(text[i]);
    cols += g ? g->width : 0;
    if (i + 1 < text.size()) cols += kLetterSpacing;
  }
  return cols;
}

int scaled(int units, double scale) { return static_cast<int>(std::lround(units * scale)); }

std::vector<cv::Rect> draw_text(cv::Mat& image, std::string_view text, cv::Point origin, double scale) {
  std::vector<cv::Rect> boxes;
  const cv::Scalar black = image.channels() == 3 ? cv::Scalar(0, 0, 0) : cv::Scalar(0);
  int col = 0;
  for (char ch : text) {
    const Glyph* g = find_glyph(ch);
    if (!g) {
      boxes.emplace_back();
      continue;
    }
    cv::Rect ink;
    for (int r = 0; r < kRows; ++r) {
      for (int c = 0; c < g->width; ++c) {
        if (!g->ink(r, c)) continue;
        const int x0 = origin.x + scaled(col + c, scale), x1 = origin.x + scaled(col + c + 1, scale);
        const int y0 = origin.y + scaled(r, scale), y1 = origin.y + scaled(r + 1, scale);
        const cv::Rect cell(x0, y0, x1 - x0, y1 - y0);
        cv::rectangle(image, cell, black, cv::FILLED);
        ink = ink.empty() ? cell : (ink | cell);
      }
    }
    boxes.push_back(ink);
    col += g->width + kLetterSpacing;
  }
  return boxes;
}

cv::Mat glyph_image(const Glyph& glyph, double scale, int pad) {
  const int w = scaled(glyph.width, scale), h = scaled(kRows, scale);
  cv::Mat img(h + 2 * pad, w + 2 * pad, CV_8UC1, cv::Scalar(255));
  const char text[2] = {glyph.ch, 0};
  draw_text(img, std::string_view(text, 1), {pad, pad}, scale);
  return img;
}

}  // namespace fingereye::font
