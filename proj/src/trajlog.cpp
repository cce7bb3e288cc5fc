#include "lhop/trajlog.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lhop::trajlog {

namespace {

// Flattened column layout. Kept in one place so writer, reader and header
// cannot drift apart.
template <typename Visitor>
void visit_columns(StepRecord& r, Visitor&& visit) {
  visit("time", r.state.time);
  visit("px", r.state.com_position.x);
  visit("py", r.state.com_position.y);
  visit("pz", r.state.com_position.z);
  visit("vx", r.state.com_velocity.x);
  visit("vy", r.state.com_velocity.y);
  visit("vz", r.state.com_velocity.z);
  visit("roll", r.state.roll);
  visit("pitch", r.state.pitch);
  visit("yaw", r.state.yaw);
  visit("wx", r.state.angular_velocity.x);
  visit("wy", r.state.angular_velocity.y);
  visit("wz", r.state.angular_velocity.z);
  char name[16];
  for (int i = 0; i < sim::kNumJoints; ++i) {
    std::snprintf(name, sizeof(name), "q%d", i);
    visit(name, r.state.q[i]);
  }
  for (int i = 0; i < sim::kNumJoints; ++i) {
    std::snprintf(name, sizeof(name), "qd%d", i);
    visit(name, r.state.qd[i]);
  }
  for (int i = 0; i < sim::kNumLegs; ++i) {
    std::snprintf(name, sizeof(name), "contact%d", i);
    visit(name, r.state.contact[i]);
  }
  for (int i = 0; i < sim::kNumLegs; ++i) {
    std::snprintf(name, sizeof(name), "footh%d", i);
    visit(name, r.state.foot_heights[i]);
  }
  visit("terrain_h", r.state.terrain_height);
  for (int i = 0; i < sim::kObservationDim; ++i) {
    std::snprintf(name, sizeof(name), "obs%d", i);
    visit(name, r.obs.v[i]);
  }
  for (int i = 0; i < sim::kNumJoints; ++i) {
    std::snprintf(name, sizeof(name), "act%d", i);
    visit(name, r.action.delta_q[i]);
  }
  visit("r_total", r.reward.total);
  visit("r_global", r.reward.global);
  visit("r_takeoff", r.reward.takeoff);
  visit("r_flight", r.reward.flight);
  visit("r_land", r.reward.land);
  visit("r_peak", r.reward.peak);
  visit("w_takeoff", r.reward.phase.takeoff);
  visit("w_flight", r.reward.phase.flight);
  visit("w_land", r.reward.phase.land);
  visit("flag_ground", r.reward.phase.near_ground);
  visit("flag_up", r.reward.phase.ascending);
  visit("flag_down", r.reward.phase.descending);
  visit("ev_apex", r.apex_event);
  visit("ev_apex_h", r.apex_height);
  visit("ev_td", r.touchdown_event);
  visit("ev_td_roll", r.td_roll);
  visit("ev_td_pitch", r.td_pitch);
  visit("ev_td_speed", r.td_speed);
  visit("ev_td_time", r.td_time);
}

struct ColumnCounter {
  int count = 0;
  template <typename T>
  void operator()(const char*, T&) {
    ++count;
  }
};

int column_count() {
  StepRecord r;
  ColumnCounter c;
  visit_columns(r, c);
  return c.count;
}

}  // namespace

std::string csv_header() {
  StepRecord r;
  std::string header;
  visit_columns(r, [&header](const char* name, auto&) {
    if (!header.empty()) header += ',';
    header += name;
  });
  return header;
}

void write_csv(const std::vector<StepRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trajlog: cannot open " + path);
  out << csv_header() << '\n';
  char buf[40];
  std::string line;
  for (const StepRecord& rec : records) {
    line.clear();
    // visit_columns takes a mutable record; copies are cheap relative to IO.
    StepRecord r = rec;
    visit_columns(r, [&line, &buf](const char*, auto& value) {
      if (!line.empty()) line += ',';
      using T = std::remove_reference_t<decltype(value)>;
      if constexpr (std::is_same_v<T, bool>) {
        line += value ? '1' : '0';
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", double(value));
        line += buf;
      }
    });
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("trajlog: write failed for " + path);
}

std::vector<StepRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trajlog: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajlog: empty file " + path);
  if (line != csv_header())
    throw std::runtime_error("trajlog: header mismatch in " + path);

  const int expected = column_count();
  std::vector<StepRecord> records;
  std::vector<double> values;
  values.reserve(expected);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    values.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{})
        throw std::runtime_error("trajlog: parse error in " + path);
      values.push_back(v);
      p = next < end && *next == ',' ? next + 1 : next;
    }
    if (static_cast<int>(values.size()) != expected)
      throw std::runtime_error("trajlog: column count mismatch in " + path);
    StepRecord r;
    int idx = 0;
    visit_columns(r, [&values, &idx](const char*, auto& value) {
      using T = std::remove_reference_t<decltype(value)>;
      value = static_cast<T>(values[idx++]);
    });
    records.push_back(r);
  }
  return records;
}

estimator::Episode to_episode(const std::vector<StepRecord>& records) {
  estimator::Episode episode;
  episode.obs.reserve(records.size());
  episode.truth.reserve(records.size());
  for (const StepRecord& r : records) {
    episode.obs.push_back(r.obs);
    episode.truth.push_back({r.state.com_velocity.x, r.state.com_velocity.y,
                             r.state.com_velocity.z, r.state.height_above_terrain()});
  }
  return episode;
}

}  // namespace lhop::trajlog
