#include "partmotion/synthgen/object.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "partmotion/util/digest.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::synthgen {

std::string to_string(Category c) {
  switch (c) {
    case Category::door: return "door";
    case Category::laptop: return "laptop";
    case Category::oven: return "oven";
    case Category::refrigerator: return "refrigerator";
    case Category::microwave: return "microwave";
    case Category::table: return "table";
    case Category::storage: return "storage";
  }
  return "?";
}

Category category_from_string(const std::string& name) {
  for (Category c : all_categories()) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown category: " + name);
}

std::vector<Category> all_categories() {
  return {Category::door,      Category::laptop,    Category::oven,
          Category::refrigerator, Category::microwave, Category::table,
          Category::storage};
}

void JointSpec::validate() const {
  if (std::abs(axis.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("JointSpec: axis is not unit length");
  }
  if (!(pose_min < pose_max)) {
    throw std::invalid_argument("JointSpec: pose_min must be < pose_max");
  }
}

PartPose ArticulatedObject::clamp_pose(const PartPose& p) const {
  PartPose out = p;
  for (int j = 0; j < num_joints(); ++j) {
    out[j] = std::clamp(out[j], joints[static_cast<std::size_t>(j)].pose_min,
                        joints[static_cast<std::size_t>(j)].pose_max);
  }
  return out;
}

namespace {

constexpr double kRevoluteMax = M_PI / 2.0;
constexpr double kPrismaticMax = 0.4;

struct BoxSpec {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3::Ones();  // half extents

  double area() const {
    const Vec3 s = 2.0 * half;
    return 2.0 * (s.x() * s.y() + s.y() * s.z() + s.z() * s.x());
  }

  Vec3 sample_surface(Rng& rng) const {
    const Vec3 s = 2.0 * half;
    const double axy = s.x() * s.y();
    const double ayz = s.y() * s.z();
    const double azx = s.z() * s.x();
    // Face pairs weighted by area; each pair splits evenly by sign.
    const double u = rng.uniform() * (axy + ayz + azx);
    int axis;  // the fixed axis of the chosen face
    if (u < axy) axis = 2;
    else if (u < axy + ayz) axis = 0;
    else axis = 1;
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      p[a] = a == axis ? sign * half[a] : rng.uniform(-half[a], half[a]);
    }
    return center + p;
  }
};

struct PartGroup {
  std::vector<BoxSpec> boxes;
  double area() const {
    double a = 0.0;
    for (const auto& b : boxes) a += b.area();
    return a;
  }
};

struct Blueprint {
  PartGroup base;
  std::vector<PartGroup> movable;  // one group per joint
  std::vector<JointSpec> joints;
};

Blueprint build_door(Rng& rng) {
  Blueprint bp;
  const double h = rng.uniform(0.9, 1.1);       // door height (z)
  const double w = rng.uniform(0.5, 0.7);       // total width (x)
  const double t = 0.04;                        // thickness (y)
  const double post = rng.uniform(0.05, 0.07);  // frame cross-section

  // Frame: two posts and a lintel.
  bp.base.boxes.push_back(
      {{-(w - post) / 2.0, 0.0, 0.0}, {post / 2.0, t / 2.0, h / 2.0}});
  bp.base.boxes.push_back(
      {{(w - post) / 2.0, 0.0, 0.0}, {post / 2.0, t / 2.0, h / 2.0}});
  bp.base.boxes.push_back(
      {{0.0, 0.0, (h + post) / 2.0}, {w / 2.0 - post, t / 2.0, post / 2.0}});

  const double pw = w / 2.0 - post;  // panel half width
  PartGroup panel;
  panel.boxes.push_back({{0.0, 0.0, 0.0}, {pw, t / 2.0, h / 2.0 - 0.01}});

  // Hinge: one of 4 orientations (left/right edge x opening direction).
  const int variant = static_cast<int>(rng.uniform_int(4));
  const double hinge_x = (variant & 1) ? pw : -pw;
  const double axis_sign = (variant & 2) ? 1.0 : -1.0;
  // Handle near the free edge breaks the panel's flip symmetry.
  const double handle_x = -hinge_x * 0.85;
  panel.boxes.push_back(
      {{handle_x, t / 2.0 + 0.02, 0.0}, {0.015, 0.02, 0.05}});

  JointSpec joint;
  joint.kind = JointType::revolute;
  joint.axis = Vec3(0.0, 0.0, axis_sign);
  joint.pivot = Vec3(hinge_x, 0.0, 0.0);
  joint.pose_min = 0.0;
  joint.pose_max = kRevoluteMax;

  bp.movable.push_back(std::move(panel));
  bp.joints.push_back(joint);
  return bp;
}

Blueprint build_laptop(Rng& rng) {
  Blueprint bp;
  const double w = rng.uniform(0.28, 0.36);  // width (x)
  const double d = rng.uniform(0.20, 0.26);  // depth (y)
  const double t = 0.02;

  bp.base.boxes.push_back({{0.0, 0.0, t / 2.0}, {w / 2.0, d / 2.0, t / 2.0}});

  PartGroup screen;  // rest pose: closed, lying on the base
  screen.boxes.push_back(
      {{0.0, 0.0, 1.5 * t}, {w / 2.0, d / 2.0, t / 2.0}});
  screen.boxes.push_back(  // camera bump at the front edge
      {{0.0, -d / 2.0 + 0.015, 2.0 * t + 0.005}, {0.02, 0.012, 0.006}});

  JointSpec joint;
  joint.kind = JointType::revolute;
  joint.axis = Vec3(-1.0, 0.0, 0.0);  // lifts the screen's front edge
  joint.pivot = Vec3(0.0, d / 2.0, t);
  joint.pose_min = 0.0;
  joint.pose_max = kRevoluteMax;

  bp.movable.push_back(std::move(screen));
  bp.joints.push_back(joint);
  return bp;
}

Blueprint build_front_door_box(Rng& rng, double w, double d, double h,
                               bool vertical_hinge, bool allow_sides) {
  // Shared recipe for oven / refrigerator / microwave: a body box plus a
  // front-face door panel with a handle.
  Blueprint bp;
  const double t = 0.03;  // door thickness
  bp.base.boxes.push_back(
      {{0.0, -t, h / 2.0}, {w / 2.0, d / 2.0, h / 2.0}});

  PartGroup door;
  const double front_y = d / 2.0 - t / 2.0 + 0.005;  // just proud of the body
  door.boxes.push_back(
      {{0.0, front_y, h / 2.0}, {w / 2.0 - 0.01, t / 2.0, h / 2.0 - 0.01}});

  JointSpec joint;
  joint.kind = JointType::revolute;
  joint.pose_min = 0.0;
  joint.pose_max = kRevoluteMax;
  if (vertical_hinge) {
    // Left or right edge, opening outward (+y front): 2 orientations.
    const bool left = allow_sides ? rng.uniform() < 0.5 : true;
    const double hx = left ? -(w / 2.0 - 0.01) : (w / 2.0 - 0.01);
    joint.axis = Vec3(0.0, 0.0, left ? 1.0 : -1.0);
    joint.pivot = Vec3(hx, front_y, 0.0);
    // Handle on the free edge.
    door.boxes.push_back(
        {{-hx * 0.8, front_y + t, h / 2.0}, {0.015, 0.015, 0.1 * h}});
  } else {
    // Bottom edge, door swings down-and-out (up-down opening).
    joint.axis = Vec3(-1.0, 0.0, 0.0);
    joint.pivot = Vec3(0.0, front_y, 0.01);
    door.boxes.push_back(  // handle bar along the top edge
        {{0.0, front_y + t, h - 0.03}, {0.3 * w, 0.015, 0.015}});
  }

  bp.movable.push_back(std::move(door));
  bp.joints.push_back(joint);
  return bp;
}

Blueprint build_oven(Rng& rng) {
  const double w = rng.uniform(0.55, 0.65);
  const double d = rng.uniform(0.45, 0.55);
  const double h = rng.uniform(0.55, 0.65);
  return build_front_door_box(rng, w, d, h, /*vertical_hinge=*/false,
                              /*allow_sides=*/false);
}

Blueprint build_refrigerator(Rng& rng) {
  const double w = rng.uniform(0.45, 0.55);
  const double d = rng.uniform(0.45, 0.55);
  const double h = rng.uniform(0.95, 1.1);
  return build_front_door_box(rng, w, d, h, /*vertical_hinge=*/true,
                              /*allow_sides=*/true);
}

Blueprint build_microwave(Rng& rng) {
  const double w = rng.uniform(0.45, 0.55);
  const double d = rng.uniform(0.3, 0.4);
  const double h = rng.uniform(0.28, 0.34);
  return build_front_door_box(rng, w, d, h, /*vertical_hinge=*/true,
                              /*allow_sides=*/true);
}

void add_drawer(Blueprint& bp, const Vec3& center, double w, double d,
                double h) {
  PartGroup drawer;
  drawer.boxes.push_back({center, {w / 2.0, d / 2.0, h / 2.0}});
  drawer.boxes.push_back(  // knob
      {{center.x(), center.y() + d / 2.0 + 0.015, center.z()},
       {0.012, 0.015, 0.012}});
  JointSpec joint;
  joint.kind = JointType::prismatic;
  joint.axis = Vec3(0.0, 1.0, 0.0);  // slides toward the front
  joint.pivot = Vec3::Zero();
  joint.pose_min = 0.0;
  joint.pose_max = kPrismaticMax;
  bp.movable.push_back(std::move(drawer));
  bp.joints.push_back(joint);
}

Blueprint build_table(Rng& rng) {
  Blueprint bp;
  const double w = rng.uniform(0.7, 0.9);
  const double d = rng.uniform(0.45, 0.55);
  const double h = rng.uniform(0.38, 0.45);
  const double top_t = 0.04;

  bp.base.boxes.push_back(
      {{0.0, 0.0, h - top_t / 2.0}, {w / 2.0, d / 2.0, top_t / 2.0}});
  const double leg = 0.03;
  for (int sx = -1; sx <= 1; sx += 2) {
    for (int sy = -1; sy <= 1; sy += 2) {
      bp.base.boxes.push_back({{sx * (w / 2.0 - leg), sy * (d / 2.0 - leg),
                                (h - top_t) / 2.0},
                               {leg, leg, (h - top_t) / 2.0}});
    }
  }
  add_drawer(bp, {0.0, 0.02, h - top_t - 0.07}, rng.uniform(0.28, 0.36),
             d * 0.85, 0.12);
  return bp;
}

Blueprint build_storage(Rng& rng) {
  Blueprint bp;
  const double w = rng.uniform(0.45, 0.55);
  const double d = rng.uniform(0.4, 0.5);
  const double h = rng.uniform(0.75, 0.85);

  bp.base.boxes.push_back({{0.0, -0.03, h / 2.0}, {w / 2.0, d / 2.0, h / 2.0}});
  // Two stacked drawers: a 2-joint object.
  const double dw = w * 0.8;
  add_drawer(bp, {0.0, 0.0, 0.3 * h}, dw, d * 0.9, 0.14);
  add_drawer(bp, {0.0, 0.0, 0.62 * h}, dw, d * 0.9, 0.14);
  return bp;
}

Blueprint build_blueprint(Category category, Rng& rng) {
  switch (category) {
    case Category::door: return build_door(rng);
    case Category::laptop: return build_laptop(rng);
    case Category::oven: return build_oven(rng);
    case Category::refrigerator: return build_refrigerator(rng);
    case Category::microwave: return build_microwave(rng);
    case Category::table: return build_table(rng);
    case Category::storage: return build_storage(rng);
  }
  throw std::invalid_argument("unknown category");
}

// Largest-remainder allocation of n points across weights; each slot with
// positive weight receives at least min_each.
std::vector<int> allocate_counts(const std::vector<double>& weights, int n,
                                 int min_each) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const std::size_t k = weights.size();
  std::vector<int> counts(k, 0);
  std::vector<std::pair<double, std::size_t>> rema(k);
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = n * weights[i] / total;
    counts[i] = std::max(min_each, static_cast<int>(std::floor(exact)));
    assigned += counts[i];
    rema[i] = {exact - std::floor(exact), i};
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::size_t cursor = 0;
  while (assigned < n) {
    counts[rema[cursor % k].second] += 1;
    ++assigned;
    ++cursor;
  }
  while (assigned > n) {  // min_each may have over-assigned
    auto it = std::max_element(counts.begin(), counts.end());
    *it -= 1;
    --assigned;
  }
  return counts;
}

void sample_group(const PartGroup& group, int count, Rng& rng,
                  PointCloud& cloud, int& row) {
  std::vector<double> areas;
  areas.reserve(group.boxes.size());
  for (const auto& b : group.boxes) areas.push_back(b.area());
  const std::vector<int> per_box =
      allocate_counts(areas, count, /*min_each=*/1);
  for (std::size_t bi = 0; bi < group.boxes.size(); ++bi) {
    for (int i = 0; i < per_box[bi]; ++i) {
      cloud.row(row++) = group.boxes[bi].sample_surface(rng).transpose();
    }
  }
}

}  // namespace

ArticulatedObject make_object(Category category, std::uint64_t seed,
                              int n_points) {
  if (n_points < 64) {
    throw std::invalid_argument("make_object: n_points must be >= 64");
  }
  Rng rng(mix_seed(fnv1a64(to_string(category)), seed));
  Blueprint bp = build_blueprint(category, rng);

  const std::size_t num_joints = bp.movable.size();
  // Movable share by area, clamped well inside the 10%-90% invariant.
  double movable_area = 0.0;
  for (const auto& g : bp.movable) movable_area += g.area();
  const double total_area = bp.base.area() + movable_area;
  double frac = movable_area / total_area;
  frac = std::clamp(frac, 0.18, 0.55);
  int movable_count = static_cast<int>(std::lround(frac * n_points));
  movable_count = std::clamp(
      movable_count, static_cast<int>(num_joints) * 12, (n_points * 9) / 10);
  const int base_count = n_points - movable_count;

  std::vector<double> joint_areas;
  for (const auto& g : bp.movable) joint_areas.push_back(g.area());
  const std::vector<int> joint_counts =
      allocate_counts(joint_areas, movable_count, /*min_each=*/12);

  ArticulatedObject obj;
  obj.category = category;
  obj.seed = seed;
  obj.joints = bp.joints;
  for (const auto& j : obj.joints) j.validate();
  obj.rest_cloud.resize(n_points, 3);
  obj.movable_mask.assign(static_cast<std::size_t>(n_points), 0);
  obj.per_joint_masks.assign(num_joints,
                             Mask(static_cast<std::size_t>(n_points), 0));

  int row = 0;
  sample_group(bp.base, base_count, rng, obj.rest_cloud, row);
  for (std::size_t jo = 0; jo < num_joints; ++jo) {
    const int start = row;
    sample_group(bp.movable[jo], joint_counts[jo], rng, obj.rest_cloud, row);
    for (int i = start; i < row; ++i) {
      obj.movable_mask[static_cast<std::size_t>(i)] = 1;
      obj.per_joint_masks[jo][static_cast<std::size_t>(i)] = 1;
    }
  }
  return obj;
}

geom::RigidTransform joint_rigid_transform(const JointSpec& joint, double from,
                                           double to) {
  geom::RigidTransform out;
  if (joint.kind == JointType::revolute) {
    out.R = geom::axis_angle_rotation(joint.axis, to - from);
    out.t = joint.pivot - out.R * joint.pivot;
  } else {
    out.t = (to - from) * joint.axis;
  }
  return out;
}

PointCloud pose_cloud(const ArticulatedObject& obj, const PartPose& pose) {
  if (pose.size() != obj.num_joints()) {
    throw std::invalid_argument("pose_cloud: pose length mismatch");
  }
  PointCloud out = obj.rest_cloud;
  for (int j = 0; j < obj.num_joints(); ++j) {
    const geom::RigidTransform tf =
        joint_rigid_transform(obj.joints[static_cast<std::size_t>(j)], 0.0,
                              pose[j]);
    const Mask& mask = obj.per_joint_masks[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        out.row(i) = tf.apply(out.row(i).transpose()).transpose();
      }
    }
  }
  return out;
}

geom::PointTransforms gt_point_transforms(const ArticulatedObject& obj,
                                          const PartPose& phi_from,
                                          const PartPose& phi_to) {
  if (phi_from.size() != obj.num_joints() ||
      phi_to.size() != obj.num_joints()) {
    throw std::invalid_argument("gt_point_transforms: pose length mismatch");
  }
  geom::PointTransforms out =
      geom::PointTransforms::identity(obj.rest_cloud.rows());
  for (int j = 0; j < obj.num_joints(); ++j) {
    const geom::RigidTransform tf = joint_rigid_transform(
        obj.joints[static_cast<std::size_t>(j)], phi_from[j], phi_to[j]);
    const Mat34 m = tf.as_matrix();
    const Mask& mask = obj.per_joint_masks[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < obj.rest_cloud.rows(); ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        out.rows[static_cast<std::size_t>(i)] = m;
      }
    }
  }
  return out;
}

}  // namespace partmotion::synthgen
