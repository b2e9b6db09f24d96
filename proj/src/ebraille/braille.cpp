#include "fingereye/ebraille/braille.hpp"

#include "fingereye/embedded_data.hpp"

#include <sstream>

namespace fingereye::ebraille {

std::string to_dot_list(BrailleCell cell) {
  std::string s;
  for (int d = 1; d <= 8; ++d)
    if (cell.has(d)) s.push_back(static_cast<char>('0' + d));
  return s.empty() ? "0" : s;
}

BrailleCell cell_from_dot_list(std::string_view digits) {
  if (digits == "0") return {};
  if (digits.empty()) throw Error(ErrorCode::ParseError, "empty dot list");
  BrailleCell c;
  for (char ch : digits) {
    if (ch < '1' || ch > '8') throw Error(ErrorCode::ParseError, "bad dot in list: " + std::string(digits));
    const auto bit = static_cast<std::uint8_t>(1u << (ch - '1'));
    if (c.dots & bit) throw Error(ErrorCode::ParseError, "repeated dot in list: " + std::string(digits));
    c.dots |= bit;
  }
  return c;
}

std::uint16_t side_bit(std::string_view name) {
  if (name.size() == 2 && (name[0] == 'L' || name[0] == 'R') && name[1] >= '1' && name[1] <= '4') {
    const int idx = (name[0] == 'L' ? 0 : 4) + (name[1] - '1');
    return static_cast<std::uint16_t>(1u << (kSideShift + idx));
  }
  throw Error(ErrorCode::ParseError, "unknown side dot: " + std::string(name));
}

std::string side_dot_name(int bit) {
  const int idx = bit - kSideShift;
  if (idx < 0 || idx > 7) throw Error(ErrorCode::InvalidArgument, "not a side-dot bit");
  return std::string(1, idx < 4 ? 'L' : 'R') + std::to_string(idx % 4 + 1);
}

BrailleTable BrailleTable::parse(std::string_view text) {
  BrailleTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  std::map<char32_t, BrailleCell>* section = nullptr;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, dots;
    if (!(ls >> key)) continue;
    if (key == "version") continue;
    if (key == "[six]") {
      section = &t.six_;
      continue;
    }
    if (key == "[eight]") {
      section = &t.eight_;
      continue;
    }
    if (!section || key.rfind("U+", 0) != 0 || !(ls >> dots))
      throw Error(ErrorCode::ParseError, "braille table line " + std::to_string(lineNo));
    const char32_t cp = static_cast<char32_t>(std::stoul(key.substr(2), nullptr, 16));
    const BrailleCell cell = cell_from_dot_list(dots);
    if (section == &t.six_ && (cell.has(7) || cell.has(8)))
      throw Error(ErrorCode::ParseError, "six-dot cell uses dot 7 or 8 on line " + std::to_string(lineNo));
    if (!section->emplace(cp, cell).second)
      throw Error(ErrorCode::ParseError, "duplicate code point on line " + std::to_string(lineNo));
  }
  for (const auto& [cp, cell] : t.six_) t.eight_.emplace(cp, cell);
  auto invert = [](const auto& fwd, auto& inv, const char* name) {
    for (const auto& [cp, cell] : fwd)
      if (!inv.emplace(cell.dots, cp).second)
        throw Error(ErrorCode::ParseError, std::string("cell assigned twice in ") + name + ": " + to_dot_list(cell));
  };
  invert(t.six_, t.sixInv_, "six");
  invert(t.eight_, t.eightInv_, "eight");
  return t;
}

const BrailleTable& BrailleTable::builtin() {
  static const BrailleTable table = parse(embedded::kBrailleTable);
  return table;
}

BrailleCell BrailleTable::encode(char32_t cp, Dialect d) const {
  const auto& m = d == Dialect::Six ? six_ : eight_;
  const auto it = m.find(cp);
  if (it == m.end()) throw Error(ErrorCode::UnsupportedCharacter, "no Braille cell for U+" + std::to_string(cp));
  return it->second;
}

char32_t BrailleTable::decode(BrailleCell cell, Dialect d) const {
  const auto& m = d == Dialect::Six ? sixInv_ : eightInv_;
  const auto it = m.find(cell.dots);
  if (it == m.end()) throw Error(ErrorCode::UnknownCell, "unknown cell " + to_dot_list(cell));
  return it->second;
}

std::vector<char32_t> BrailleTable::charset(Dialect d) const {
  std::vector<char32_t> out;
  for (const auto& [cp, cell] : d == Dialect::Six ? six_ : eight_) out.push_back(cp);
  return out;
}

BrailleCell encode_char(char32_t ch, Dialect dialect) { return BrailleTable::builtin().encode(ch, dialect); }
char32_t decode_cell(BrailleCell cell, Dialect dialect) { return BrailleTable::builtin().decode(cell, dialect); }

CommandPatterns CommandPatterns::parse(std::string_view text) {
  CommandPatterns p;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind, dot;
    if (!(ls >> kind)) continue;
    std::uint16_t bits = 0;
    while (ls >> dot)
      if (dot != "-") bits |= side_bit(dot);
    p.side_[feedback::command_kind_from_string(kind)] = bits;
  }
  return p;
}

const CommandPatterns& CommandPatterns::builtin() {
  static const CommandPatterns patterns = parse(embedded::kCommandPatterns);
  return patterns;
}

std::uint16_t CommandPatterns::side(feedback::CommandKind kind) const {
  const auto it = side_.find(kind);
  return it == side_.end() ? 0 : it->second;
}

ElectrodeFrame compose_frame(BrailleCell cell, const feedback::FeedbackCommand& cmd, const CommandPatterns& patterns) {
  return {static_cast<std::uint16_t>(cell.dots | (patterns.side(cmd.kind) & kSideMask))};
}

std::vector<char32_t> utf8_decode(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 6 ? 2 : (c >> 4) == 14 ? 3 : (c >> 3) == 30 ? 4 : 0;
    if (len == 0 || i + len > s.size()) throw Error(ErrorCode::ParseError, "invalid UTF-8");
    char32_t cp = len == 1 ? c : c & (0x7F >> len);
    for (int k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 2) throw Error(ErrorCode::ParseError, "invalid UTF-8");
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    s.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return s;
}

}  // namespace fingereye::ebraille
