#include "dorloc/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dorloc/csv.hpp"
#include "dorloc/rng.hpp"

namespace dor {

std::string to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::corridor: return "corridor";
    case SegmentKind::plaza: return "plaza";
    case SegmentKind::intersection: return "intersection";
    case SegmentKind::sparse_road: return "sparse_road";
  }
  return "corridor";
}

SegmentKind segment_kind_from_string(const std::string& name) {
  if (name == "corridor") return SegmentKind::corridor;
  if (name == "plaza") return SegmentKind::plaza;
  if (name == "intersection") return SegmentKind::intersection;
  if (name == "sparse_road") return SegmentKind::sparse_road;
  throw std::invalid_argument("unknown segment kind: " + name);
}

double ground_half_width(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::corridor: return kCorridorHalfWidth;
    case SegmentKind::intersection: return kIntersectionHalfWidth;
    case SegmentKind::plaza: return kPlazaGroundHalfWidth;
    case SegmentKind::sparse_road: return kSparseRoadHalfWidth;
  }
  return kCorridorHalfWidth;
}

void SceneSpec::validate() const {
  if (!(extent > 0.0)) throw std::invalid_argument("scene: extent must be positive");
  if (segments.empty()) throw std::invalid_argument("scene: segments must be nonempty");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("scene: noise_sigma must be >= 0");
  for (const SegmentSpec& s : segments) {
    if (!(s.length > 0.0)) throw std::invalid_argument("scene: segment length must be positive");
    if (!(s.point_spacing > 0.0))
      throw std::invalid_argument("scene: point_spacing must be positive");
    if (!(s.wall_height >= 0.0))
      throw std::invalid_argument("scene: wall_height must be >= 0");
    if (!(s.pole_density >= 0.0))
      throw std::invalid_argument("scene: pole_density must be >= 0");
    if (!(s.facade_depth >= 0.0))
      throw std::invalid_argument("scene: facade_depth must be >= 0");
  }
}

namespace {

// Straight centerline piece in the world frame.
struct Piece {
  double start_s = 0.0;
  double length = 0.0;
  double heading = 0.0;
  Eigen::Vector2d origin{0.0, 0.0};

  Eigen::Vector2d dir() const { return {std::cos(heading), std::sin(heading)}; }
  Eigen::Vector2d lateral() const { return {-std::sin(heading), std::cos(heading)}; }
};

std::vector<Piece> build_centerline(const SceneSpec& spec) {
  std::vector<Piece> pieces;
  Eigen::Vector2d cursor{0.0, 0.0};
  double heading = 0.0;
  double s = 0.0;
  for (const SegmentSpec& seg : spec.segments) {
    heading = normalize_angle(heading + seg.turn_deg * M_PI / 180.0);
    Piece piece;
    piece.start_s = s;
    piece.length = seg.length;
    piece.heading = heading;
    piece.origin = cursor;
    pieces.push_back(piece);
    cursor += piece.dir() * seg.length;
    s += seg.length;
  }
  return pieces;
}

class SegmentEmitter {
 public:
  SegmentEmitter(const Piece& piece, double noise_sigma, SplitRng rng, PointCloud& out)
      : piece_(piece), sigma_(noise_sigma), rng_(rng), out_(out) {}

  // (u, v, z): along-segment, lateral, up. Noise is applied in world axes.
  void emit(double u, double v, double z) {
    const Eigen::Vector2d xy = piece_.origin + piece_.dir() * u + piece_.lateral() * v;
    double px = xy.x(), py = xy.y(), pz = z;
    if (sigma_ > 0.0) {
      px += rng_.next_gaussian(sigma_);
      py += rng_.next_gaussian(sigma_);
      pz += rng_.next_gaussian(sigma_);
    }
    out_.points.emplace_back(px, py, pz);
  }

  // In-surface sample jitter, half a grid pitch. Points stay exactly on
  // their surface; only the sampling pattern decorrelates. A perfectly
  // regular lattice beats against the NDT grid and ripples the score.
  double jitter(double spacing) { return (rng_.next_double() - 0.5) * spacing; }

  // Horizontal rectangle z = kGroundZ, u in [0, len), v in [-hw, hw].
  void ground_patch(double u0, double u1, double half_width, double spacing) {
    const long nu = std::lround(std::floor((u1 - u0) / spacing));
    const long nv = std::lround(std::floor(2.0 * half_width / spacing));
    for (long i = 0; i < nu; ++i) {
      const double u = u0 + (i + 0.5) * spacing;
      for (long j = 0; j < nv; ++j) {
        const double v = -half_width + (j + 0.5) * spacing;
        emit(u + jitter(spacing), v + jitter(spacing), kGroundZ);
      }
    }
  }

  // Per-block outward recess depths for a wall of the given span.
  std::vector<double> facade_offsets(double span, double depth) {
    const long blocks =
        std::max<long>(1, std::lround(std::ceil(span / kFacadeBlockLength)));
    std::vector<double> offsets(blocks, 0.0);
    if (depth > 0.0) {
      for (double& d : offsets) d = depth * rng_.next_double();
    }
    return offsets;
  }

  // Vertical wall at lateral offset v, spanning u in [u0, u1); positive v
  // recesses outward (away from the road), negative inward.
  void wall_along(double u0, double u1, double v, double height, double spacing,
                  double facade_depth) {
    if (height <= 0.0) return;
    const std::vector<double> recess = facade_offsets(u1 - u0, facade_depth);
    const double sign = v >= 0.0 ? 1.0 : -1.0;
    const long nu = std::lround(std::floor((u1 - u0) / spacing));
    const long nz = std::lround(std::floor(height / spacing));
    for (long i = 0; i < nu; ++i) {
      const double u = u0 + (i + 0.5) * spacing;
      const auto block = std::min<std::size_t>(
          recess.size() - 1,
          static_cast<std::size_t>((u - u0) / kFacadeBlockLength));
      for (long k = 0; k < nz; ++k) {
        emit(u + jitter(spacing), v + sign * recess[block],
             kGroundZ + (k + 0.5) * spacing + jitter(spacing));
      }
    }
  }

  // Vertical wall at fixed u, spanning lateral v in [v0, v1); `outward` is
  // the direction (+1/-1 along u) in which recesses point.
  void wall_across(double u, double v0, double v1, double height, double spacing,
                   double facade_depth, double outward) {
    if (height <= 0.0) return;
    const std::vector<double> recess = facade_offsets(v1 - v0, facade_depth);
    const long nv = std::lround(std::floor((v1 - v0) / spacing));
    const long nz = std::lround(std::floor(height / spacing));
    for (long j = 0; j < nv; ++j) {
      const double v = v0 + (j + 0.5) * spacing;
      const auto block = std::min<std::size_t>(
          recess.size() - 1,
          static_cast<std::size_t>((v - v0) / kFacadeBlockLength));
      for (long k = 0; k < nz; ++k) {
        emit(u + outward * recess[block], v + jitter(spacing),
             kGroundZ + (k + 0.5) * spacing + jitter(spacing));
      }
    }
  }

  // Curb-height box of points (hedge / parked object analog). Samples stay
  // inside the box regardless of the grid pitch.
  void clutter_box(double u_center, double v_center, double spacing) {
    const long nu = std::max<long>(2, std::lround(kClutterLength / spacing));
    const long nv = std::max<long>(2, std::lround(kClutterWidth / spacing));
    const long nz = std::max<long>(2, std::lround(kClutterHeight / spacing));
    const double du = kClutterLength / nu;
    const double dv = kClutterWidth / nv;
    const double dz = kClutterHeight / nz;
    for (long i = 0; i < nu; ++i) {
      for (long j = 0; j < nv; ++j) {
        for (long k = 0; k < nz; ++k) {
          emit(u_center + (i + 0.5) * du - 0.5 * kClutterLength + jitter(du),
               v_center + (j + 0.5) * dv - 0.5 * kClutterWidth + jitter(dv),
               kGroundZ + (k + 0.5) * dz + jitter(dz));
        }
      }
    }
  }

  // Vertical cylinder shell centered at (u, v).
  void pole(double u, double v, double spacing) {
    const long nz = std::lround(std::ceil(kPoleHeight / spacing));
    const long na =
        std::max<long>(8, std::lround(std::ceil(2.0 * M_PI * kPoleRadius / spacing)));
    for (long k = 0; k < nz; ++k) {
      const double z = kGroundZ + (k + 0.5) * (kPoleHeight / nz);
      for (long a = 0; a < na; ++a) {
        const double th = (2.0 * M_PI * a) / na + jitter(2.0 * M_PI / na);
        emit(u + kPoleRadius * std::cos(th), v + kPoleRadius * std::sin(th),
             z + jitter(kPoleHeight / nz));
      }
    }
  }

  SplitRng& rng() { return rng_; }

 private:
  const Piece& piece_;
  double sigma_;
  SplitRng rng_;
  PointCloud& out_;
};

void emit_segment(const SegmentSpec& seg, const Piece& piece, double sigma,
                  SplitRng rng, PointCloud& out) {
  SegmentEmitter em(piece, sigma, rng, out);
  const double sp = seg.point_spacing;
  const double len = seg.length;
  const double hw = ground_half_width(seg.kind);

  const double fd = seg.facade_depth;
  switch (seg.kind) {
    case SegmentKind::corridor:
      em.ground_patch(0.0, len, hw, sp);
      em.wall_along(0.0, len, -hw, seg.wall_height, sp, fd);
      em.wall_along(0.0, len, hw, seg.wall_height, sp, fd);
      break;
    case SegmentKind::plaza:
      em.ground_patch(0.0, len, hw, sp);
      em.wall_along(0.0, len, -kPlazaWallDistance, seg.wall_height, sp, fd);
      em.wall_along(0.0, len, kPlazaWallDistance, seg.wall_height, sp, fd);
      break;
    case SegmentKind::sparse_road:
      em.ground_patch(0.0, len, hw, sp);
      break;
    case SegmentKind::intersection: {
      const double mid = 0.5 * len;
      const double g0 = mid - kCrossHalfWidth;
      const double g1 = mid + kCrossHalfWidth;
      em.ground_patch(0.0, len, hw, sp);
      // crossing street floor on both arms
      const long nu = std::lround(std::floor(2.0 * kCrossHalfWidth / sp));
      const long nv = std::lround(std::floor(kCrossArmDepth / sp));
      for (long i = 0; i < nu; ++i) {
        const double u = g0 + (i + 0.5) * sp;
        for (long j = 0; j < nv; ++j) {
          const double d = (j + 0.5) * sp;
          em.emit(u + em.jitter(sp), hw + d + em.jitter(sp), kGroundZ);
          em.emit(u + em.jitter(sp), -hw - d + em.jitter(sp), kGroundZ);
        }
      }
      // main walls interrupted by the crossing
      em.wall_along(0.0, g0, -hw, seg.wall_height, sp, fd);
      em.wall_along(0.0, g0, hw, seg.wall_height, sp, fd);
      em.wall_along(g1, len, -hw, seg.wall_height, sp, fd);
      em.wall_along(g1, len, hw, seg.wall_height, sp, fd);
      // crossing-street walls, normals along the travel direction
      em.wall_across(g0, hw, hw + kCrossArmDepth, seg.wall_height, sp, fd, -1.0);
      em.wall_across(g1, hw, hw + kCrossArmDepth, seg.wall_height, sp, fd, 1.0);
      em.wall_across(g0, -hw - kCrossArmDepth, -hw, seg.wall_height, sp, fd, -1.0);
      em.wall_across(g1, -hw - kCrossArmDepth, -hw, seg.wall_height, sp, fd, 1.0);
      break;
    }
  }

  const long pole_count = std::lround(seg.pole_density * len / 100.0);
  if (pole_count > 0) {
    const double pitch = len / static_cast<double>(pole_count);
    const double max_jitter = std::min(2.0, 0.25 * pitch);
    for (long k = 0; k < pole_count; ++k) {
      const double jitter = (2.0 * em.rng().next_double() - 1.0) * max_jitter;
      const double u = (k + 0.5) * pitch + jitter;
      const double side = (k % 2 == 0) ? 1.0 : -1.0;
      em.pole(u, side * (hw - kPoleInset), sp);
    }
  }

  if (seg.kind == SegmentKind::sparse_road) {
    const long clutter_count = std::lround(len / kClutterPitch);
    for (long k = 0; k < clutter_count; ++k) {
      const double jitter = (2.0 * em.rng().next_double() - 1.0) * 2.0;
      const double u = (k + 0.5) * (len / clutter_count) + jitter;
      const double side = (k % 2 == 0) ? -1.0 : 1.0;
      em.clutter_box(u, side * (hw - 1.2), sp);
    }
  }
}

}  // namespace

PointCloud generate_scene(const SceneSpec& spec) {
  spec.validate();
  const std::vector<Piece> pieces = build_centerline(spec);
  const SplitRng base(spec.seed);
  PointCloud cloud;
  cloud.frame_id = Frame::map;
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    emit_segment(spec.segments[i], pieces[i], spec.noise_sigma,
                 base.child(static_cast<std::uint64_t>(i)), cloud);
  }
  return cloud;
}

double total_centerline_length(const SceneSpec& spec) {
  double total = 0.0;
  for (const SegmentSpec& s : spec.segments) total += s.length;
  return total;
}

SegmentKind segment_kind_at(const SceneSpec& spec, double arc_length) {
  double cum = 0.0;
  for (const SegmentSpec& s : spec.segments) {
    cum += s.length;
    if (arc_length < cum) return s.kind;
  }
  return spec.segments.back().kind;
}

Trajectory make_trajectory(const SceneSpec& spec, double spacing) {
  spec.validate();
  if (!(spacing > 0.0)) {
    throw std::invalid_argument("make_trajectory: spacing must be positive");
  }
  const std::vector<Piece> pieces = build_centerline(spec);
  const double total = total_centerline_length(spec);

  Trajectory traj;
  traj.spacing = spacing;
  std::size_t piece_idx = 0;
  for (long k = 0;; ++k) {
    const double s = k * spacing;
    if (s > total + 1e-9) break;
    while (piece_idx + 1 < pieces.size() &&
           s >= pieces[piece_idx].start_s + pieces[piece_idx].length) {
      ++piece_idx;
    }
    const Piece& piece = pieces[piece_idx];
    const double local = std::min(s - piece.start_s, piece.length);
    const Eigen::Vector2d xy = piece.origin + piece.dir() * local;
    traj.waypoints.push_back({Point(xy.x(), xy.y(), kSensorZ), piece.heading});
  }
  return traj;
}

namespace {

std::pair<std::string, std::string> split_key_value(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("scene spec: expected 'key = value': " + line);
  }
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

SegmentSpec parse_segment_line(const std::string& value) {
  SegmentSpec seg;
  bool have_kind = false, have_length = false;
  std::istringstream iss(value);
  std::string token;
  while (iss >> token) {
    const auto [key, val] = split_key_value(token);
    if (key == "kind") {
      seg.kind = segment_kind_from_string(val);
      have_kind = true;
    } else if (key == "length") {
      seg.length = std::stod(val);
      have_length = true;
    } else if (key == "wall_height") {
      seg.wall_height = std::stod(val);
    } else if (key == "pole_density") {
      seg.pole_density = std::stod(val);
    } else if (key == "point_spacing") {
      seg.point_spacing = std::stod(val);
    } else if (key == "turn_deg") {
      seg.turn_deg = std::stod(val);
    } else if (key == "facade_depth") {
      seg.facade_depth = std::stod(val);
    } else {
      throw std::invalid_argument("scene spec: unknown segment key: " + key);
    }
  }
  if (!have_kind || !have_length) {
    throw std::invalid_argument("scene spec: segment needs kind= and length=");
  }
  return seg;
}

}  // namespace

SceneSpec parse_scene_spec_text(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto [key, value] = split_key_value(line);
    if (key == "extent") {
      spec.extent = std::stod(value);
    } else if (key == "noise_sigma") {
      spec.noise_sigma = std::stod(value);
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
    } else if (key == "segment") {
      spec.segments.push_back(parse_segment_line(value));
    } else {
      throw std::invalid_argument("scene spec: unknown key: " + key);
    }
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scene spec: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene_spec_text(buf.str());
}

void write_scene_spec(const std::filesystem::path& path, const SceneSpec& spec) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write scene spec: " + path.string());
  }
  out << "# dorloc scene spec v1\n";
  out << "extent = " << spec.extent << "\n";
  out << "noise_sigma = " << spec.noise_sigma << "\n";
  out << "seed = " << spec.seed << "\n";
  for (const SegmentSpec& s : spec.segments) {
    out << "segment = kind=" << to_string(s.kind) << " length=" << s.length
        << " wall_height=" << s.wall_height << " pole_density=" << s.pole_density
        << " point_spacing=" << s.point_spacing;
    if (s.turn_deg != 0.0) out << " turn_deg=" << s.turn_deg;
    if (s.facade_depth != 0.0) out << " facade_depth=" << s.facade_depth;
    out << "\n";
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvTable table;
  table.comments = {"dorloc trajectory v1",
                    "spacing=" + format_double(traj.spacing)};
  table.header = {"waypoint_id", "x", "y", "z", "yaw"};
  for (std::size_t i = 0; i < traj.waypoints.size(); ++i) {
    const auto& wp = traj.waypoints[i];
    table.rows.push_back({std::to_string(i), format_double(wp.position.x),
                          format_double(wp.position.y), format_double(wp.position.z),
                          format_double(wp.yaw)});
  }
  write_csv(path, table);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  Trajectory traj;
  for (const std::string& comment : table.comments) {
    if (comment.starts_with("spacing=")) {
      traj.spacing = parse_double(comment.substr(8));
    }
  }
  const std::size_t cx = table.column("x");
  const std::size_t cy = table.column("y");
  const std::size_t cz = table.column("z");
  const std::size_t cyaw = table.column("yaw");
  for (const auto& row : table.rows) {
    traj.waypoints.push_back({Point(parse_double(row[cx]), parse_double(row[cy]),
                                    parse_double(row[cz])),
                              parse_double(row[cyaw])});
  }
  return traj;
}

SceneSpec default_scene_spec() {
  SceneSpec spec;
  spec.extent = 340.0;
  spec.noise_sigma = 0.02;
  spec.seed = 12;
  const double sp = 0.3;
  const double fd = 0.35;
  spec.segments = {
      {SegmentKind::corridor, 60.0, 4.0, 3.0, sp, 0.0, fd},
      {SegmentKind::intersection, 20.0, 4.0, 0.0, sp, 0.0, fd},
      {SegmentKind::plaza, 50.0, 4.0, 1.0, sp, 0.0, fd},
      {SegmentKind::corridor, 50.0, 4.0, 2.0, sp, 0.0, fd},
      {SegmentKind::intersection, 20.0, 4.0, 0.0, sp, 0.0, fd},
      {SegmentKind::corridor, 50.0, 4.0, 3.0, sp, 90.0, fd},
      {SegmentKind::sparse_road, 50.0, 0.0, 2.0, sp, 0.0, 0.0},
  };
  return spec;
}

}  // namespace dor
