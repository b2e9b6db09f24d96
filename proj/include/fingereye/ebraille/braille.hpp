#pragma once

#include "fingereye/common.hpp"
#include "fingereye/feedback/feedback.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fingereye::ebraille {

enum class Dialect { Six, Eight };

/// Dots 1..8 in bits 0..7 (1-2-3-7 left column, 4-5-6-8 right column).
struct BrailleCell {
  std::uint8_t dots = 0;

  bool has(int dot) const { return dots & (1u << (dot - 1)); }
  friend bool operator==(BrailleCell, BrailleCell) = default;
};

/// "1245" style list, "0" for the empty cell.
std::string to_dot_list(BrailleCell cell);
BrailleCell cell_from_dot_list(std::string_view digits);

/// Electrode bits: 0..7 the Braille cell, 8..11 L1..L4 (outer left column,
/// top to bottom), 12..15 R1..R4.
inline constexpr int kSideShift = 8;
inline constexpr std::uint16_t kCenterMask = 0x00FF;
inline constexpr std::uint16_t kSideMask = 0xFF00;
inline constexpr double kDotPitchXMm = 2.29;
inline constexpr double kDotPitchYMm = 2.54;

/// Bit for side dot "L1".."L4" / "R1".."R4".
std::uint16_t side_bit(std::string_view name);
std::string side_dot_name(int bit);

struct ElectrodeFrame {
  std::uint16_t dots16 = 0;

  BrailleCell cell() const { return {static_cast<std::uint8_t>(dots16 & kCenterMask)}; }
  std::uint16_t side() const { return dots16 & kSideMask; }
};

/// Bidirectional code-point table for both dialects.
class BrailleTable {
 public:
  /// Parses the data-file format: `[six]` / `[eight]` sections of
  /// `U+XXXX <dots>` lines; [eight] extends [six].
  static BrailleTable parse(std::string_view text);
  /// Table shipped with the library.
  static const BrailleTable& builtin();

  BrailleCell encode(char32_t cp, Dialect d) const;
  char32_t decode(BrailleCell cell, Dialect d) const;
  std::vector<char32_t> charset(Dialect d) const;

 private:
  std::map<char32_t, BrailleCell> six_, eight_;
  std::map<std::uint8_t, char32_t> sixInv_, eightInv_;
};

/// Throws UnsupportedCharacter.
BrailleCell encode_char(char32_t ch, Dialect dialect);
/// Throws UnknownCell.
char32_t decode_cell(BrailleCell cell, Dialect dialect);

/// Side-dot patterns per command kind, from the command-pattern data file.
class CommandPatterns {
 public:
  static CommandPatterns parse(std::string_view text);
  static const CommandPatterns& builtin();
  std::uint16_t side(feedback::CommandKind kind) const;

 private:
  std::map<feedback::CommandKind, std::uint16_t> side_;
};

ElectrodeFrame compose_frame(BrailleCell cell, const feedback::FeedbackCommand& cmd,
                             const CommandPatterns& patterns = CommandPatterns::builtin());

/// UTF-8 helpers for the CLI and table tools.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(char32_t cp);

}  // namespace fingereye::ebraille
