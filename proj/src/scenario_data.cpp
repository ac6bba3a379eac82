#include "pdgplay/scenario_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "pdgplay/error.hpp"

namespace pdgplay {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r\"");
    const auto e = cell.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) return std::nan("");
  return v;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  if (name.empty()) return -1;
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

double heading_of(const VehicleState& s) {
  return s.speed() > kHeadingSpeedEps ? std::atan2(s.vy, s.vx) : s.theta;
}

Approach side_of(double dx, double dy) {
  if (std::abs(dy) >= std::abs(dx)) return dy < 0.0 ? Approach::S : Approach::N;
  return dx < 0.0 ? Approach::W : Approach::E;
}

/// Quarter turns counterclockwise taking the S approach to `a`.
int quarter_turns(Approach a) {
  switch (a) {
    case Approach::S: return 0;
    case Approach::E: return 1;
    case Approach::N: return 2;
    case Approach::W: return 3;
  }
  return 0;
}

long overlap(const Track& a, const Track& b) {
  const long lo = std::max(a.first_frame(), b.first_frame());
  const long hi = std::min(a.last_frame(), b.last_frame());
  return hi >= lo ? hi - lo + 1 : 0;
}

const TrackFrame* frame_at(const Track& t, long frame) {
  const auto it = std::lower_bound(
      t.frames.begin(), t.frames.end(), frame,
      [](const TrackFrame& f, long v) { return f.frame < v; });
  return it != t.frames.end() && it->frame == frame ? &*it : nullptr;
}

}  // namespace

LoadResult parse_tracks(std::istream& in, const CsvSchema& schema,
                        const std::string& source) {
  LoadResult out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const std::vector<std::string> header = split_csv_line(line);

  struct Col {
    const std::string* name;
    int index;
  };
  const int c_id = find_column(header, schema.track_id);
  const int c_frame = find_column(header, schema.frame_id);
  const int c_x = find_column(header, schema.x);
  const int c_y = find_column(header, schema.y);
  const int c_vx = find_column(header, schema.vx);
  const int c_vy = find_column(header, schema.vy);
  std::string missing;
  for (const Col& c : {Col{&schema.track_id, c_id}, Col{&schema.frame_id, c_frame},
                       Col{&schema.x, c_x}, Col{&schema.y, c_y},
                       Col{&schema.vx, c_vx}, Col{&schema.vy, c_vy}}) {
    if (c.index < 0) missing += (missing.empty() ? "" : ", ") + *c.name;
  }
  if (!missing.empty()) {
    throw ValidationError(source + ": missing mandatory column(s) " + missing +
                          "; header is '" + line +
                          "' (rename columns or pass a column mapping)");
  }
  const int c_ts = find_column(header, schema.timestamp_ms);
  const int c_psi = find_column(header, schema.psi);
  const int c_len = find_column(header, schema.length);
  const int c_wid = find_column(header, schema.width);
  const int c_type = find_column(header, schema.agent_type);

  std::map<std::string, std::vector<TrackFrame>> grouped;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++out.rows;
    const std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](int c) -> std::string {
      return c >= 0 && c < static_cast<int>(cells.size()) ? cells[c] : "";
    };
    if (c_type >= 0) {
      const std::string type = cell(c_type);
      if (!type.empty() && type != "car") {
        ++out.skipped_non_vehicle;
        continue;
      }
    }
    const std::string id = cell(c_id);
    const double frame = parse_double(cell(c_frame));
    TrackFrame f;
    f.state.x = parse_double(cell(c_x));
    f.state.y = parse_double(cell(c_y));
    f.state.vx = parse_double(cell(c_vx));
    f.state.vy = parse_double(cell(c_vy));
    const double psi = c_psi >= 0 ? parse_double(cell(c_psi)) : 0.0;
    const double ts = c_ts >= 0 ? parse_double(cell(c_ts)) : frame * 100.0;
    f.length = c_len >= 0 ? parse_double(cell(c_len)) : 0.0;
    f.width = c_wid >= 0 ? parse_double(cell(c_wid)) : 0.0;
    const double fields[] = {frame, f.state.x, f.state.y, f.state.vx, f.state.vy,
                             ts};
    const bool finite = !id.empty() &&
                        std::all_of(std::begin(fields), std::end(fields),
                                    [](double v) { return std::isfinite(v); });
    if (!finite) {
      ++out.dropped_nonfinite;
      continue;
    }
    f.frame = std::lround(frame);
    f.timestamp_ms = std::lround(ts);
    if (!std::isfinite(f.length)) f.length = 0.0;
    if (!std::isfinite(f.width)) f.width = 0.0;
    f.state.theta = std::isfinite(psi) && c_psi >= 0
                        ? wrap_angle(psi)
                        : (f.state.speed() > kHeadingSpeedEps
                               ? std::atan2(f.state.vy, f.state.vx)
                               : 0.0);
    grouped[id].push_back(f);
  }

  for (auto& [id, frames] : grouped) {
    std::sort(frames.begin(), frames.end(),
              [](const TrackFrame& a, const TrackFrame& b) { return a.frame < b.frame; });
    for (std::size_t k = 1; k < frames.size(); ++k) {
      if (frames[k].frame == frames[k - 1].frame) {
        throw ValidationError(source + ": duplicate frame " +
                              std::to_string(frames[k].frame) + " for track " + id);
      }
    }
    bool regular = true;
    for (std::size_t k = 1; k < frames.size() && regular; ++k) {
      regular = frames[k].timestamp_ms - frames[k - 1].timestamp_ms ==
                100 * (frames[k].frame - frames[k - 1].frame);
    }
    if (!regular) ++out.irregular_timestamps;
    out.tracks.push_back(Track{id, std::move(frames)});
  }
  return out;
}

LoadResult load_tracks(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  LoadResult r = parse_tracks(in, schema, path);
  if (r.dropped_nonfinite > 0) {
    spdlog::warn("{}: dropped {} row(s) with non-finite fields", path,
                 r.dropped_nonfinite);
  }
  return r;
}

Region parse_region(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) v.push_back(parse_double(part));
  if (v.size() != 4 || !std::all_of(v.begin(), v.end(),
                                    [](double d) { return std::isfinite(d); })) {
    throw ValidationError("region must be 'x0,y0,x1,y1', got '" + text + "'");
  }
  Region r{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]),
           std::max(v[1], v[3])};
  if (!(r.x1 > r.x0 && r.y1 > r.y0)) throw ValidationError("region is empty");
  return r;
}

std::vector<Track> filter_eligible(const std::vector<Track>& tracks,
                                   int min_frames, const Region& region) {
  if (min_frames < 1) throw ValidationError("min_frames must be >= 1");
  std::vector<Track> out;
  for (const Track& t : tracks) {
    std::vector<Track> runs;
    Track cur{t.id, {}};
    auto flush = [&] {
      if (static_cast<int>(cur.frames.size()) >= min_frames) runs.push_back(cur);
      cur.frames.clear();
    };
    for (const TrackFrame& f : t.frames) {
      const bool in = region.contains(f.state.x, f.state.y);
      const bool consecutive =
          !cur.frames.empty() && f.frame == cur.frames.back().frame + 1;
      if (!in || (!cur.frames.empty() && !consecutive)) flush();
      if (in) cur.frames.push_back(f);
    }
    flush();
    if (runs.size() > 1) {
      for (std::size_t k = 0; k < runs.size(); ++k) {
        runs[k].id = t.id + "#" + std::to_string(k);
      }
    }
    for (Track& r : runs) out.push_back(std::move(r));
  }
  return out;
}

std::string to_string(Approach a) {
  switch (a) {
    case Approach::N: return "N";
    case Approach::E: return "E";
    case Approach::S: return "S";
    case Approach::W: return "W";
  }
  return "?";
}

std::string to_string(Maneuver m) {
  switch (m) {
    case Maneuver::Through: return "through";
    case Maneuver::Left: return "left";
    case Maneuver::Right: return "right";
  }
  return "?";
}

std::string to_string(const Movement& m) {
  return to_string(m.approach) + "-" + to_string(m.maneuver);
}

std::vector<Movement> all_movements() {
  std::vector<Movement> out;
  for (Approach a : {Approach::N, Approach::E, Approach::S, Approach::W}) {
    for (Maneuver m : {Maneuver::Through, Maneuver::Left, Maneuver::Right}) {
      out.push_back({a, m});
    }
  }
  return out;
}

bool IntersectionGeometry::inside(double x, double y) const {
  return std::abs(x - cx) <= half_size && std::abs(y - cy) <= half_size;
}

std::optional<Movement> classify_movement(const Track& track,
                                          const IntersectionGeometry& geom) {
  const auto& f = track.frames;
  std::size_t first_in = f.size();
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (geom.inside(f[k].state.x, f[k].state.y)) {
      first_in = k;
      break;
    }
  }
  if (first_in == 0 || first_in == f.size()) return std::nullopt;
  std::size_t exit = f.size();
  for (std::size_t k = first_in; k < f.size(); ++k) {
    if (!geom.inside(f[k].state.x, f[k].state.y)) {
      exit = k;
      break;
    }
  }
  if (exit == f.size()) return std::nullopt;

  const VehicleState& before = f[first_in - 1].state;
  const VehicleState& after = f[exit].state;
  Movement m;
  m.approach = side_of(before.x - geom.cx, before.y - geom.cy);
  const double turn = wrap_angle(heading_of(after) - heading_of(before));
  if (turn >= kTurnThresholdRad) {
    m.maneuver = Maneuver::Left;
  } else if (turn <= -kTurnThresholdRad) {
    m.maneuver = Maneuver::Right;
  } else {
    m.maneuver = Maneuver::Through;
  }
  return m;
}

namespace {

/// Through from the S approach against a movement expressed relative to it.
bool through_conflicts(const Movement& through, const Movement& other) {
  const int rel = (quarter_turns(other.approach) - quarter_turns(through.approach) + 4) % 4;
  if (rel == 1 || rel == 3) {
    return other.maneuver == Maneuver::Through || other.maneuver == Maneuver::Left;
  }
  if (rel == 2) return other.maneuver == Maneuver::Left;
  return false;
}

}  // namespace

bool conflicts(const Movement& a, const Movement& b) {
  if (a.approach == b.approach) return false;
  return (a.maneuver == Maneuver::Through && through_conflicts(a, b)) ||
         (b.maneuver == Maneuver::Through && through_conflicts(b, a));
}

std::string SceneSpec::scene_id(const std::string& source) const {
  std::string stem = source;
  const auto slash = stem.find_last_of('/');
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  const auto dot = stem.find_last_of('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  return (stem.empty() ? std::string("scene") : stem) + "_" + reference + "_" +
         std::to_string(start_frame);
}

int scene_frames(int history, int horizon) { return history + horizon + 1; }

std::vector<SceneSpec> extract_scenes(const std::vector<ClassifiedTrack>& tracks,
                                      int min_overlap) {
  std::vector<SceneSpec> out;
  for (const ClassifiedTrack& ref : tracks) {
    if (ref.movement.maneuver == Maneuver::Through) continue;
    struct Candidate {
      const Track* track;
      long shared;
    };
    std::vector<Candidate> cands;
    for (const ClassifiedTrack& other : tracks) {
      if (other.track == ref.track || !conflicts(ref.movement, other.movement)) continue;
      const long shared = overlap(*ref.track, *other.track);
      if (shared >= min_overlap) cands.push_back({other.track, shared});
    }
    if (cands.empty()) continue;
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.shared != b.shared ? a.shared > b.shared : a.track->id < b.track->id;
    });
    long lo = ref.track->first_frame();
    long hi = ref.track->last_frame();
    std::vector<std::string> members;
    for (const Candidate& c : cands) {
      const long nlo = std::max(lo, c.track->first_frame());
      const long nhi = std::min(hi, c.track->last_frame());
      if (nhi - nlo + 1 < min_overlap) continue;
      lo = nlo;
      hi = nhi;
      members.push_back(c.track->id);
    }
    std::sort(members.begin(), members.end());
    SceneSpec spec;
    spec.reference = ref.track->id;
    spec.members.push_back(ref.track->id);
    spec.members.insert(spec.members.end(), members.begin(), members.end());
    spec.start_frame = lo;
    spec.end_frame = hi;
    out.push_back(std::move(spec));
  }
  return out;
}

Scenario scene_to_scenario(const SceneSpec& scene, const std::vector<Track>& tracks,
                           long t0, const SceneOptions& opts) {
  std::unordered_map<std::string, const Track*> by_id;
  for (const Track& t : tracks) by_id[t.id] = &t;

  Scenario s;
  s.id = scene.scene_id(opts.source_file);
  s.dt = opts.dt;
  s.horizon = opts.horizon;
  s.a_max = opts.a_max;
  s.potential = opts.potential;
  s.provenance = {opts.source_file, t0, s.id};
  for (const std::string& id : scene.members) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("scene member " + id + " not loaded");
    const Track& t = *it->second;
    std::vector<VehicleState> states;
    for (long fr = t0 - opts.history; fr <= t0 + opts.horizon; ++fr) {
      const TrackFrame* f = frame_at(t, fr);
      if (!f) {
        throw ValidationError("track " + id + " lacks frame " + std::to_string(fr) +
                              " needed for t0 = " + std::to_string(t0));
      }
      states.push_back(f->state);
    }
    const auto h = static_cast<std::ptrdiff_t>(opts.history);
    s.agent_ids.push_back(id);
    s.histories.emplace_back(states.begin(), states.begin() + h);
    s.initial_states.push_back(states[h]);
    s.ground_truth.emplace_back(states.begin() + h + 1, states.end());
    const VehicleState& end = states.back();
    s.goals.push_back(GoalState{end.x, end.y, end.vx, end.vy, end.theta});
  }
  s.scene_diag = compute_scene_diag(s);
  validate(s);
  return s;
}

bool is_training_scene(const std::string& scene_id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : scene_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h % 100 < 70;
}

IngestSummary ingest_csv(const std::string& path, const Region& region,
                         const IntersectionGeometry& geom, const SceneOptions& opts,
                         const CsvSchema& schema, int min_frames) {
  IngestSummary out;
  out.load = load_tracks(path, schema);
  out.tracks_loaded = out.load.tracks.size();
  const std::vector<Track> eligible =
      filter_eligible(out.load.tracks, min_frames, region);
  out.tracks_eligible = eligible.size();

  std::vector<ClassifiedTrack> classified;
  for (const Track& t : eligible) {
    if (auto m = classify_movement(t, geom)) {
      classified.push_back({&t, *m});
    } else {
      ++out.tracks_unclassified;
      spdlog::debug("track {} never crosses the intersection box; excluded", t.id);
    }
  }
  SceneOptions o = opts;
  o.source_file = path;
  const std::vector<SceneSpec> scenes =
      extract_scenes(classified, scene_frames(o.history, o.horizon));
  out.scenes = scenes.size();
  for (const SceneSpec& sc : scenes) {
    out.scenarios.push_back(
        scene_to_scenario(sc, eligible, sc.start_frame + o.history, o));
  }
  return out;
}

}  // namespace pdgplay
