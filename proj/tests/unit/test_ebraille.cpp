#include "fingereye/ebraille/braille.hpp"
#include "fingereye/ebraille/stimulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace fingereye;
using namespace fingereye::ebraille;
using feedback::CommandKind;
using feedback::FeedbackCommand;

namespace {

// Standard literary Braille, letters a..z, transcribed from the published table.
const char* const kLiterary[26] = {"1",    "12",   "14",   "145",  "15",   "124",  "1245", "125",  "24",
                                   "245",  "13",   "123",  "134",  "1345", "135",  "1234", "12345", "1235",
                                   "234",  "2345", "136",  "1236", "2456", "1346", "13456", "1356"};

std::uint16_t sides(std::initializer_list<const char*> names) {
  std::uint16_t v = 0;
  for (const char* n : names) v |= side_bit(n);
  return v;
}

// Per-dot on-intervals of a schedule.
std::map<int, std::vector<std::pair<double, double>>> per_dot(const WaveformSchedule& s) {
  std::map<int, std::vector<std::pair<double, double>>> out;
  for (const auto& e : s.events)
    for (int b = 0; b < 16; ++b)
      if (e.activeDots & (1u << b)) out[b].emplace_back(e.tOn, e.tOff);
  return out;
}

}  // namespace

TEST(Braille, LiteraryLetters) {
  for (int i = 0; i < 26; ++i) {
    const BrailleCell c = encode_char(U'a' + i, Dialect::Six);
    EXPECT_EQ(to_dot_list(c), kLiterary[i]) << char('a' + i);
  }
  EXPECT_EQ(encode_char(U'a', Dialect::Six), BrailleCell{0x01});
}

TEST(Braille, SpaceIsEmptyCell) {
  EXPECT_EQ(encode_char(U' ', Dialect::Six).dots, 0);
  EXPECT_EQ(decode_cell({}, Dialect::Six), U' ');
  EXPECT_EQ(decode_cell({0x01}, Dialect::Six), U'a');
}

TEST(Braille, ExtendedCharacterOnlyInEight) {
  try {
    encode_char(U'á', Dialect::Six);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedCharacter);
  }
  const BrailleCell c = encode_char(U'á', Dialect::Eight);
  EXPECT_TRUE(c.has(1));
  EXPECT_TRUE(c.has(8));
  EXPECT_EQ(decode_cell(c, Dialect::Eight), U'á');
}

TEST(Braille, BijectionOverCharset) {
  for (Dialect d : {Dialect::Six, Dialect::Eight}) {
    const auto chars = BrailleTable::builtin().charset(d);
    ASSERT_GT(chars.size(), 40u);
    std::set<std::uint8_t> seen;
    for (char32_t ch : chars) {
      const BrailleCell c = encode_char(ch, d);
      EXPECT_TRUE(seen.insert(c.dots).second) << std::uint32_t(ch);
      EXPECT_EQ(decode_cell(c, d), ch);
      if (d == Dialect::Six) EXPECT_EQ(c.dots & 0xC0, 0);
    }
  }
}

TEST(Braille, UnknownCell) {
  try {
    decode_cell({0x40}, Dialect::Six);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownCell);
  }
}

TEST(Braille, TableFileParsing) {
  const BrailleTable t = BrailleTable::parse("version 1\n[six]\nU+0061 1\nU+0020 0\n[eight]\nU+0041 17\n");
  EXPECT_EQ(t.encode(U'a', Dialect::Eight).dots, 1);
  EXPECT_EQ(t.encode(U'A', Dialect::Eight).dots, 0x41);
  EXPECT_THROW(t.encode(U'A', Dialect::Six), Error);
  EXPECT_THROW(BrailleTable::parse("[six]\nU+0061 19\n"), Error);
  EXPECT_THROW(BrailleTable::parse("[six]\nU+0061 1\nU+0062 1\n"), Error);
}

TEST(Braille, Utf8RoundTrip) {
  const std::string s = "a\xc3\xa1\xce\xb1z";
  const auto cps = utf8_decode(s);
  ASSERT_EQ(cps.size(), 4u);
  EXPECT_EQ(cps[1], U'á');
  std::string back;
  for (char32_t c : cps) back += utf8_encode(c);
  EXPECT_EQ(back, s);
}

TEST(Compose, CellWithNone) {
  const ElectrodeFrame f = compose_frame(encode_char(U'a', Dialect::Six), {CommandKind::None, 0, 0});
  EXPECT_EQ(f.dots16, 0x0001);
}

TEST(Compose, EmptyCellWithUp) {
  const ElectrodeFrame f = compose_frame({}, {CommandKind::Up, 0.5, 0});
  EXPECT_EQ(f.dots16, sides({"L1", "L2", "R1", "R2"}));
  EXPECT_EQ(f.cell().dots, 0);
}

TEST(Compose, LetterWithDown) {
  const BrailleCell z = encode_char(U'z', Dialect::Six);
  const ElectrodeFrame f = compose_frame(z, {CommandKind::Down, 0.7, 0});
  EXPECT_EQ(f.cell(), z);
  EXPECT_EQ(f.side(), sides({"L3", "L4", "R3", "R4"}));
}

TEST(Compose, NewLineAndLineStart) {
  EXPECT_EQ(compose_frame({}, {CommandKind::NewLine, 0, 0}).side(), 0xFF00);
  EXPECT_EQ(compose_frame({}, {CommandKind::LineStart, 0, 0}).side(), 0);
}

TEST(Compose, FieldsNeverMix) {
  for (int dots = 0; dots < 256; ++dots)
    for (auto k : {CommandKind::None, CommandKind::Up, CommandKind::Down, CommandKind::NewLine, CommandKind::LineStart}) {
      const ElectrodeFrame f = compose_frame({static_cast<std::uint8_t>(dots)}, {k, 0.5, 0});
      ASSERT_EQ(f.dots16 & kCenterMask, dots);
      ASSERT_EQ(f.side(), CommandPatterns::builtin().side(k));
    }
}

TEST(Compose, AlternatePatternFile) {
  const CommandPatterns p = CommandPatterns::parse("Up L1 R1\nDown L4 R4\nNewLine L2\nNone -\nLineStart -\n");
  EXPECT_EQ(compose_frame({}, {CommandKind::Up, 1, 0}, p).side(), sides({"L1", "R1"}));
  EXPECT_THROW(CommandPatterns::parse("Up L9\n"), Error);
}

TEST(Compose, DotGeometry) {
  EXPECT_DOUBLE_EQ(kDotPitchXMm, 2.29);
  EXPECT_DOUBLE_EQ(kDotPitchYMm, 2.54);
}

TEST(Waveform, ThirtyHertzTenPercentPerDot) {
  const ElectrodeFrame f = compose_frame(encode_char(U'g', Dialect::Six), {CommandKind::None, 0, 0});
  const StimulationParams p;
  const WaveformSchedule s = schedule_stimulation(f, p, 1.0, 0.3);
  const auto dots = per_dot(s);
  ASSERT_EQ(dots.size(), 4u);
  const double period = 1.0 / 30.0;
  for (const auto& [dot, on] : dots) {
    ASSERT_EQ(on.size(), 30u) << dot;
    for (std::size_t k = 0; k < on.size(); ++k) {
      const double width = on[k].second - on[k].first;
      EXPECT_NEAR(width, 1.0 / 300.0, 1e-6);
      EXPECT_NEAR(width / period, 0.10, 1e-9 * 0.10);
      EXPECT_NEAR(on[k].first, k * period, 1e-12);
      if (k) EXPECT_GE(on[k].first, on[k - 1].second);
    }
  }
}

TEST(Waveform, DutyInvariantAcrossParameters) {
  for (double hz : {10.0, 30.0, 47.0})
    for (double duty : {0.05, 0.1, 0.33}) {
      StimulationParams p;
      p.frequencyHz = hz;
      p.dutyCycle = duty;
      const WaveformSchedule s =
          schedule_stimulation(compose_frame(encode_char(U'x', Dialect::Six), {CommandKind::Down, 0.6, 0}), p, 2.0, 0.6);
      for (const auto& [dot, on] : per_dot(s))
        for (const auto& [a, b] : on) ASSERT_NEAR((b - a) * hz, duty, 1e-9 * duty);
    }
}

TEST(Waveform, StrengthSetsBurstLength) {
  EXPECT_EQ(burst_length(0.0), 0);
  EXPECT_EQ(burst_length(0.1), 1);
  EXPECT_EQ(burst_length(0.26), 2);
  EXPECT_EQ(burst_length(0.5), 2);
  EXPECT_EQ(burst_length(0.75), 3);
  EXPECT_EQ(burst_length(1.0), 4);
  const WaveformSchedule s = schedule_stimulation(compose_frame({}, {CommandKind::Up, 1.0, 0}), {}, 1.0, 1.0);
  ASSERT_EQ(s.events.size(), 24u);  // 30 periods, every fifth silent
  const double period = 1.0 / 30.0;
  for (const auto& e : s.events) {
    const long k = std::lround(e.tOn / period);
    EXPECT_NE(k % 5, 4);
  }
}

TEST(Waveform, NoneCommandHasNoSideEvents) {
  const WaveformSchedule s = schedule_stimulation(compose_frame({}, {CommandKind::None, 0, 0}), {}, 1.0, 0.0);
  EXPECT_TRUE(s.events.empty());
  const WaveformSchedule t =
      schedule_stimulation(compose_frame(encode_char(U'e', Dialect::Six), {CommandKind::None, 0, 0}), {}, 1.0, 0.0);
  for (const auto& e : t.events) EXPECT_EQ(e.activeDots & kSideMask, 0);
}

TEST(Waveform, CsvExport) {
  const WaveformSchedule s = schedule_stimulation(compose_frame({0x01}, {CommandKind::None, 0, 0}), {}, 0.1, 0.0);
  std::ostringstream out;
  write_waveform_csv(out, s);
  EXPECT_EQ(out.str(),
            "t,dotIndex,state\n0.000000,0,1\n0.003333,0,0\n0.033333,0,1\n0.036667,0,0\n0.066667,0,1\n0.070000,0,0\n");
}

TEST(Regulation, Examples) {
  StimulationParams p;
  p.voltageV = 80;
  EXPECT_DOUBLE_EQ(regulate_current(30, p).voltageV, 80);
  p.voltageV = 98;
  EXPECT_DOUBLE_EQ(regulate_current(20, p).voltageV, 100);
  p.voltageV = 61;
  EXPECT_DOUBLE_EQ(regulate_current(40, p).voltageV, 60);
}

TEST(Regulation, ConvergesOnOhmicLoads) {
  for (double r = 2.0; r <= 3.3 + 1e-9; r += 0.1)
    for (double v0 : {60.0, 100.0}) {
      StimulationParams p;
      p.voltageV = v0;
      const auto currents = simulate_regulation(r, p, 20);
      ASSERT_EQ(currents.size(), 21u);
      EXPECT_NEAR(currents.back(), 30.0, 1.0) << r << " MOhm from " << v0 << " V";
      EXPECT_NEAR(currents.back() * r, 30.0 * r, 3.3);  // 60..100 V at 30 uA
    }
  StimulationParams p;
  p.voltageV = 60;
  EXPECT_NEAR(simulate_regulation(3.0, p, 20).back(), 30.0, 1.0);
}

TEST(Regulation, MonotoneInDeficit) {
  StimulationParams p;
  p.voltageV = 75;
  double last = -1e9;
  for (double measured = 60; measured >= 0; measured -= 0.5) {
    StimulationParams q = p;
    q.minVoltageV = -1e9;
    q.maxVoltageV = 1e9;
    const double v = regulate_current(measured, q).voltageV;
    EXPECT_GE(v, last);
    last = v;
  }
}

TEST(Regulation, ParamsValidated) {
  StimulationParams p;
  p.dutyCycle = 1.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.voltageV = 120;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Training, AlternatesWithHalfSecondGaps) {
  const auto& pat = CommandPatterns::builtin();
  const WaveformSchedule s = training_sequence(2);
  ASSERT_FALSE(s.events.empty());
  std::vector<std::pair<double, std::uint16_t>> slots;
  for (const auto& e : s.events) {
    const double slotStart = std::floor(e.tOn + 1e-9);  // slot every 1.0 s (0.5 on, 0.5 gap)
    EXPECT_LT(e.tOn - slotStart, 0.5);
    if (slots.empty() || slots.back().first != slotStart) slots.emplace_back(slotStart, e.activeDots);
    EXPECT_EQ(e.activeDots, slots.back().second);
  }
  ASSERT_EQ(slots.size(), 4u);
  EXPECT_EQ(slots[0].second, pat.side(CommandKind::Up));
  EXPECT_EQ(slots[1].second, pat.side(CommandKind::Down));
  EXPECT_EQ(slots[2].second, pat.side(CommandKind::Up));
  EXPECT_EQ(slots[3].second, pat.side(CommandKind::Down));
  for (std::size_t i = 1; i < slots.size(); ++i) EXPECT_NE(slots[i].second, slots[i - 1].second);
  EXPECT_TRUE(training_sequence(0).events.empty());
}
