#include "fingereye/sim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace fingereye::sim {

using feedback::CommandKind;

namespace {

bool corrective(CommandKind k) { return k == CommandKind::Up || k == CommandKind::Down; }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void TrajectoryLog::validate() const {
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t > samples[i - 1].t)) throw Error(ErrorCode::InvalidArgument, "trajectory time not increasing");
}

std::vector<double> speed_profile(const TrajectoryLog& log, double windowS) {
  const auto& s = log.samples;
  std::vector<double> v(s.size(), 0.0);
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    while (s[i].t - s[lo].t > windowS / 2) ++lo;
    while (hi + 1 < s.size() && s[hi + 1].t - s[i].t <= windowS / 2) ++hi;
    if (hi > lo) v[i] = (s[hi].xMm - s[lo].xMm) / (s[hi].t - s[lo].t);
  }
  return v;
}

MetricsReport compute_metrics(const std::vector<TrajectoryLog>& logs, const MetricsConfig& cfg) {
  if (logs.empty()) throw Error(ErrorCode::InvalidArgument, "no logs");
  MetricsReport r;
  r.runs = static_cast<int>(logs.size());

  double sum = 0.0;
  std::size_t n = 0, inside = 0;
  std::map<long, std::pair<double, double>> bins;
  std::vector<double> ends;
  for (const auto& log : logs) {
    log.validate();
    for (const auto& s : log.samples) {
      sum += s.yMm;
      ++n;
      if (std::abs(s.yMm) <= cfg.containmentMm) ++inside;
      const long bin = static_cast<long>(std::floor(s.xMm / cfg.envelopeBinMm));
      auto [it, fresh] = bins.try_emplace(bin, s.yMm, s.yMm);
      if (!fresh) {
        it->second.first = std::max(it->second.first, s.yMm);
        it->second.second = std::min(it->second.second, s.yMm);
      }
    }
    if (!log.samples.empty()) {
      ends.push_back(std::abs(log.samples.back().yMm));
      const double elapsed = log.samples.back().t - log.samples.front().t;
      if (elapsed > 0) r.runSpeedsMmPerS.push_back((log.samples.back().xMm - log.samples.front().xMm) / elapsed);
    }
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "logs hold no samples");
  r.samples = static_cast<int>(n);
  r.meanOffsetMm = sum / n;
  double ss = 0.0;
  for (const auto& log : logs)
    for (const auto& s : log.samples) ss += (s.yMm - r.meanOffsetMm) * (s.yMm - r.meanOffsetMm);
  r.stdOffsetMm = std::sqrt(ss / n);
  r.containment2mmFraction = static_cast<double>(inside) / n;
  for (const auto& [bin, mm] : bins) {
    r.envelopeXMm.push_back((bin + 0.5) * cfg.envelopeBinMm);
    r.maxEnvelopeMm.push_back(mm.first);
    r.minEnvelopeMm.push_back(mm.second);
    r.maxAbsEnvelopeMm = std::max({r.maxAbsEnvelopeMm, std::abs(mm.first), std::abs(mm.second)});
  }
  r.meanEndDriftMm = mean(ends);
  r.avgSpeedMmPerS = mean(r.runSpeedsMmPerS);

  struct Interval {
    double onset, clear;
    bool cleared;
    std::size_t first, last;  // sample range while shown
    CommandKind kind;
  };
  std::vector<std::vector<Interval>> perLog;
  for (const auto& log : logs) {
    std::vector<Interval> iv;
    const auto& s = log.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const CommandKind k = s[i].commandActive;
      const bool starts = corrective(k) && (i == 0 || s[i - 1].commandActive != k);
      if (!starts) continue;
      std::size_t j = i;
      while (j + 1 < s.size() && s[j + 1].commandActive == k) ++j;
      const bool cleared = j + 1 < s.size();
      iv.push_back({s[i].t, cleared ? s[j + 1].t : s[j].t, cleared, i, j, k});
    }
    perLog.push_back(std::move(iv));
  }

  for (std::size_t l = 0; l < logs.size(); ++l) {
    const auto& s = logs[l].samples;
    for (const auto& iv : perLog[l]) {
      if (iv.cleared) r.complianceDurations.push_back(iv.clear - iv.onset);
      // Down asks for increasing y: the worst point is the running minimum.
      const double dir = iv.kind == CommandKind::Down ? 1.0 : -1.0;
      double worst = dir * s[iv.first].yMm;
      for (std::size_t k = iv.first; k <= iv.last; ++k) {
        const double y = dir * s[k].yMm;
        worst = std::min(worst, y);
        if (y >= worst + cfg.reactionThresholdMm) {
          r.reactionTimes.push_back(s[k].t - iv.onset);
          break;
        }
      }
    }
  }
  r.meanComplianceS = mean(r.complianceDurations);
  r.medianReactionS = median(r.reactionTimes);

  const double window = r.complianceDurations.empty() ? 2.0 : r.meanComplianceS;
  for (std::size_t l = 0; l < logs.size(); ++l) {
    const auto& s = logs[l].samples;
    const auto v = speed_profile(logs[l], cfg.speedWindowS);
    double lastShown = -1e300;
    std::size_t next = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (next < perLog[l].size() && perLog[l][next].first == i) {
        const auto& iv = perLog[l][next++];
        if (iv.onset - lastShown >= cfg.burstQuietS) {
          ++r.commandBursts;
          double lowest = v[i];
          for (std::size_t k = i + 1; k < s.size() && s[k].t <= iv.onset + window; ++k) lowest = std::min(lowest, v[k]);
          if (lowest < v[i]) ++r.burstsFollowedBySpeedDrop;
        }
      }
      if (corrective(s[i].commandActive)) lastShown = s[i].t;
    }
  }
  return r;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["runs"] = runs;
  j["samples"] = samples;
  j["meanOffsetMm"] = meanOffsetMm;
  j["stdOffsetMm"] = stdOffsetMm;
  j["containment2mmFraction"] = containment2mmFraction;
  j["maxAbsEnvelopeMm"] = maxAbsEnvelopeMm;
  j["meanEndDriftMm"] = meanEndDriftMm;
  j["avgSpeedMmPerS"] = avgSpeedMmPerS;
  j["runSpeedsMmPerS"] = runSpeedsMmPerS;
  j["medianReactionS"] = medianReactionS;
  j["reactionTimes"] = reactionTimes;
  j["meanComplianceS"] = meanComplianceS;
  j["complianceDurations"] = complianceDurations;
  j["commandBursts"] = commandBursts;
  j["burstsFollowedBySpeedDrop"] = burstsFollowedBySpeedDrop;
  j["envelopeXMm"] = envelopeXMm;
  j["maxEnvelopeMm"] = maxEnvelopeMm;
  j["minEnvelopeMm"] = minEnvelopeMm;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.runs = j.at("runs").get<int>();
    r.samples = j.at("samples").get<int>();
    r.meanOffsetMm = j.at("meanOffsetMm").get<double>();
    r.stdOffsetMm = j.at("stdOffsetMm").get<double>();
    r.containment2mmFraction = j.at("containment2mmFraction").get<double>();
    r.maxAbsEnvelopeMm = j.at("maxAbsEnvelopeMm").get<double>();
    r.meanEndDriftMm = j.at("meanEndDriftMm").get<double>();
    r.avgSpeedMmPerS = j.at("avgSpeedMmPerS").get<double>();
    r.runSpeedsMmPerS = j.at("runSpeedsMmPerS").get<std::vector<double>>();
    r.medianReactionS = j.at("medianReactionS").get<double>();
    r.reactionTimes = j.at("reactionTimes").get<std::vector<double>>();
    r.meanComplianceS = j.at("meanComplianceS").get<double>();
    r.complianceDurations = j.at("complianceDurations").get<std::vector<double>>();
    r.commandBursts = j.at("commandBursts").get<int>();
    r.burstsFollowedBySpeedDrop = j.at("burstsFollowedBySpeedDrop").get<int>();
    r.envelopeXMm = j.at("envelopeXMm").get<std::vector<double>>();
    r.maxEnvelopeMm = j.at("maxEnvelopeMm").get<std::vector<double>>();
    r.minEnvelopeMm = j.at("minEnvelopeMm").get<std::vector<double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("metrics report: ") + e.what());
  }
}

std::string trajectory_meta_jsonl(const nlohmann::ordered_json& metadata, double lineLengthMm) {
  nlohmann::ordered_json meta;
  meta["meta"] = metadata;
  meta["lineLengthMm"] = lineLengthMm;
  return meta.dump();
}

std::string trajectory_sample_jsonl(const TrajectorySample& s) {
  nlohmann::ordered_json j;
  j["t"] = s.t;
  j["x"] = s.xMm;
  j["y"] = s.yMm;
  j["command"] = feedback::to_string(s.commandActive);
  return j.dump();
}

void write_trajectory_jsonl(std::ostream& out, const TrajectoryLog& log) {
  out << trajectory_meta_jsonl(log.metadata, log.lineLengthMm) << '\n';
  for (const auto& s : log.samples) out << trajectory_sample_jsonl(s) << '\n';
}

TrajectoryLog read_trajectory_jsonl(std::istream& in) {
  TrajectoryLog log;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::ordered_json::parse(line);
      if (j.contains("meta")) {
        log.metadata = j.at("meta");
        log.lineLengthMm = j.value("lineLengthMm", log.lineLengthMm);
        continue;
      }
      log.samples.push_back({j.at("t").get<double>(), j.at("x").get<double>(), j.at("y").get<double>(),
                             feedback::command_kind_from_string(j.value("command", std::string("None")))});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, "trajectory line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  log.validate();
  return log;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryLog>& logs) {
  out << "run,t,x,y,command\n";
  for (std::size_t r = 0; r < logs.size(); ++r)
    for (const auto& s : logs[r].samples)
      out << r << ',' << format_double(s.t) << ',' << format_double(s.xMm) << ',' << format_double(s.yMm) << ','
          << feedback::to_string(s.commandActive) << '\n';
}

std::vector<TrajectoryLog> read_trajectory_csv(std::istream& in, double lineLengthMm) {
  std::vector<TrajectoryLog> logs;
  std::string line;
  int lineNo = 0;
  auto number = [&](const std::string& field) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size())
      throw Error(ErrorCode::ParseError, "CSV line " + std::to_string(lineNo) + ": bad number '" + field + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineNo == 1 && line.rfind("run,", 0) == 0)) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw Error(ErrorCode::ParseError, "CSV line " + std::to_string(lineNo) + ": expected 5 fields");
    const auto run = static_cast<std::size_t>(number(f[0]));
    if (run >= logs.size()) logs.resize(run + 1);
    logs[run].lineLengthMm = lineLengthMm;
    logs[run].samples.push_back({number(f[1]), number(f[2]), number(f[3]), feedback::command_kind_from_string(f[4])});
  }
  for (const auto& l : logs) l.validate();
  return logs;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "metric,value\n";
  const auto j = r.to_json();
  for (const auto& [key, value] : j.items())
    if (value.is_number()) out << key << ',' << (value.is_number_float() ? format_double(value.get<double>()) : value.dump()) << '\n';
}

}  // namespace fingereye::sim
