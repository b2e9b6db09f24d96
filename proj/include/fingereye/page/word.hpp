#pragma once

#include "fingereye/page/fingertip.hpp"
#include "fingereye/page/text_lines.hpp"

namespace fingereye::page {

struct WordCrop {
  cv::Mat grayPatch;
  cv::Rect bbox;  // frame coordinates
  int lineId = -1;
};

/// Line whose lower bbox edge lies above the tip, nearest first. Throws
/// NoLineAboveFinger when there is none.
const LineRegion& line_above(const std::vector<LineRegion>& lines, Point2 tip);

/// Picks the text line above and closest to the fingertip, labels the blobs
/// inside it, takes the largest blob among those horizontally nearest the tip
/// (within `nearSlack` pixels of the nearest; smaller x on ties), merges every
/// blob whose x-range overlaps it and crops the merged box from `gray`.
WordCrop extract_focused_word(const std::vector<LineRegion>& lines, const FingertipEstimate& tip, const Frame& gray,
                              const cv::Mat& blobs, double nearSlack = 2.0);

}  // namespace fingereye::page
