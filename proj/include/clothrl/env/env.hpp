#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "clothrl/core/container.hpp"
#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"
#include "clothrl/env/randomization.hpp"
#include "clothrl/env/render.hpp"
#include "clothrl/sim/world.hpp"

namespace clothrl::env {

enum class Task { tape, hanging, diagonal_folding };
enum class ObsMode { lowdim, image, both };

inline std::string task_name(Task t) {
  switch (t) {
    case Task::tape: return "tape";
    case Task::hanging: return "hanging";
    default: return "diagonal_folding";
  }
}
inline Task parse_task(const std::string& s) {
  if (s == "tape") return Task::tape;
  if (s == "hanging") return Task::hanging;
  if (s == "diagonal_folding") return Task::diagonal_folding;
  throw ConfigError("env: unknown task '" + s + "'");
}

struct ObservationBundle {
  std::vector<double> lowdim;      // gripper position, aperture, task feature
  std::vector<double> image;       // flattened 84x84x3 when the mode includes images
  std::vector<double> full_state;  // corners, gripper pose, task feature
};

struct EnvConfig {
  Task task = Task::diagonal_folding;
  ObsMode obs_mode = ObsMode::lowdim;
  int episode_steps = 50;
  double control_dt = 0.1;          // 10 Hz control
  int sim_steps_per_control = 24;   // 1/240 s simulation steps
  int sim_substeps = 4;             // integrator substeps per simulation step
  double max_speed = 0.5;           // m/s end-effector command scale
  double aperture_rate = 3.0;       // full close in ~0.33 s
  double close_threshold = 0.1;     // crossing below triggers a grasp attempt
  double open_threshold = 0.9;      // crossing above releases
  double tape_threshold = 0.05;     // m, corner distance to the tape line
  double diagonal_threshold = 0.05; // m, folded corner pair distance
  double anti_crumple_fraction = 0.75;
  double hang_min_height = 0.05;    // m above the table
  int hang_stable_steps = 20;       // consecutive simulation steps
  int image_h = 84, image_w = 84;
  sim::Aabb workspace{{-0.6, -0.6, 0.005}, {0.6, 0.6, 0.6}};
  sim::ClothParams cloth;           // nominal; randomization scales it
  sim::WorldParams world;
  RandomizationSpec rand;

  double sim_dt() const { return control_dt / sim_steps_per_control; }

  static EnvConfig defaults(Task task);

  int lowdim_dim() const { return 5; }
  int full_state_dim() const { return 17; }
  std::vector<int> aux_indices() const {
    // cloth corners and the task feature, read from full_state
    std::vector<int> idx;
    for (int i = 0; i < 12; ++i) idx.push_back(i);
    idx.push_back(16);
    return idx;
  }
};

inline EnvConfig EnvConfig::defaults(Task task) {
  EnvConfig c;
  c.task = task;
  auto& r = c.rand;
  if (task == Task::tape) {
    c.cloth.width = 0.3;    // towel short side along x
    c.cloth.height = 0.6;   // long side along y, folded toward +y
    r.set("cloth_center_x", Dist::normal(0.0, 0.005).clamped(-0.02, 0.02));
    r.set("cloth_center_y", Dist::normal(0.0, 0.005).clamped(-0.02, 0.02));
    r.set("tape_fraction", Dist::choice3(5.0 / 8.0, 7.0 / 8.0, 1.0));
  } else {
    c.cloth.width = 0.28;
    c.cloth.height = 0.28;
    const double cy = task == Task::hanging ? -0.22 : 0.0;
    r.set("cloth_center_x", Dist::normal(0.0, 0.005).clamped(-0.02, 0.02));
    r.set("cloth_center_y", Dist::uniform(cy - 0.01, cy + 0.01).clamped(cy - 0.02, cy + 0.02));
  }
  r.set("cloth_scale", Dist::uniform(0.98, 1.02).clamped(0.9, 1.1));
  r.set("cloth_yaw", Dist::constant(0.0));
  r.set("stiffness_scale", Dist::uniform(0.9, 1.1).clamped(0.5, 2.0));
  r.set("damping_scale", Dist::uniform(0.95, 1.05).clamped(0.5, 2.0));
  if (task == Task::hanging) {
    r.set("hanger_y", Dist::uniform(0.14, 0.16).clamped(0.1, 0.2));
    r.set("hanger_top_z", Dist::uniform(0.21, 0.23).clamped(0.18, 0.3));
    r.set("hanger_half_len", Dist::uniform(0.11, 0.13).clamped(0.08, 0.2));
  }
  r.set("grip_spawn_x", Dist::normal(0.0, 0.005).clamped(-0.05, 0.05));
  r.set("grip_spawn_y", Dist::normal(task == Task::hanging ? -0.22 : -0.1, 0.005)
                            .clamped(-0.45, 0.2));
  r.set("grip_spawn_z", Dist::constant(0.25));
  // visual randomization (camera pose/intrinsics, light, colors, textures)
  r.set("camera_pos_x", Dist::normal(0.7, 0.02).clamped(0.5, 0.9));
  r.set("camera_pos_y", Dist::normal(0.0, 0.02).clamped(-0.2, 0.2));
  r.set("camera_pos_z", Dist::normal(0.45, 0.02).clamped(0.3, 0.6));
  r.set("camera_look_x", Dist::normal(0.0, 0.01).clamped(-0.1, 0.1));
  r.set("camera_look_y", Dist::normal(0.0, 0.01).clamped(-0.1, 0.1));
  r.set("camera_look_z", Dist::normal(0.05, 0.01).clamped(-0.05, 0.15));
  r.set("camera_focal", Dist::normal(100.0, 4.0).clamped(70.0, 130.0));
  r.set("light_x", Dist::uniform(0.2, 0.8));
  r.set("light_y", Dist::uniform(-0.6, 0.6));
  r.set("light_z", Dist::uniform(0.7, 1.2));
  r.set("light_r", Dist::uniform(0.85, 1.0));
  r.set("light_g", Dist::uniform(0.85, 1.0));
  r.set("light_b", Dist::uniform(0.85, 1.0));
  r.set("cloth_r", Dist::uniform(0.6, 0.95));
  r.set("cloth_g", Dist::uniform(0.1, 0.4));
  r.set("cloth_b", Dist::uniform(0.1, 0.4));
  r.set("table_r", Dist::uniform(0.4, 0.7));
  r.set("table_g", Dist::uniform(0.35, 0.6));
  r.set("table_b", Dist::uniform(0.25, 0.5));
  r.set("table2_r", Dist::uniform(0.2, 0.45));
  r.set("table2_g", Dist::uniform(0.2, 0.4));
  r.set("table2_b", Dist::uniform(0.15, 0.35));
  r.set("bg_r", Dist::uniform(0.4, 0.7));
  r.set("bg_g", Dist::uniform(0.5, 0.75));
  r.set("bg_b", Dist::uniform(0.6, 0.9));
  r.set("texture_scale", Dist::uniform(4.0, 14.0));
  r.set("texture_seed", Dist::uniform(0.0, 1e9));
  return c;
}

struct StepInfo {
  bool success = false;
  bool aborted = false;  // physics instability ended the episode
};

struct StepResult {
  ObservationBundle obs;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Episodic cloth-manipulation environment: one of Tape, Hanging or
/// Diagonal Folding, with sparse +100 reward, per-episode domain
/// randomization, snapshot/restore, and an optional rendered observation.
class ClothEnv {
 public:
  explicit ClothEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {}

  const EnvConfig& config() const { return cfg_; }
  const SampledParams& episode_params() const { return params_; }
  const sim::ClothWorld& world() const { return world_; }
  sim::ClothWorld& world() { return world_; }
  bool episode_active() const { return active_; }
  int step_count() const { return step_count_; }
  bool was_released() const { return released_; }
  double flat_side_u() const { return side_u_; }
  double flat_side_v() const { return side_v_; }
  double tape_y() const { return tape_y_; }

  ObservationBundle reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    Rng scene_rng = rng_.derive("scene");
    params_ = randomize(cfg_.rand, scene_rng);
    build_scene();
    begin_bookkeeping(0);
    return observe();
  }

  /// Restores a recorded snapshot exactly; the fresh seed only drives events
  /// after the restore point (grasp failures).
  ObservationBundle reset_to_snapshot(const Container& snap, std::uint64_t seed) {
    rng_ = Rng(seed);
    if (!snap.contains("env/task") ||
        snap.bytes("env/task") != task_name(cfg_.task))
      throw FormatError("env: snapshot task mismatch");
    world_ = sim::ClothWorld::load(snap, "sim/");
    world_.params.workspace = cfg_.workspace;
    params_ = SampledParams::from_log_line(snap.bytes("env/params"));
    const auto& book = snap.f64("env/bookkeeping");
    side_u_ = book.at(3);
    side_v_ = book.at(4);
    tape_y_ = book.at(5);
    begin_bookkeeping(int(book.at(0)));
    released_ = book.at(1) != 0.0;
    hang_counter_ = int(book.at(2));
    return observe();
  }

  Container snapshot() const {
    Container c;
    world_.save(c, "sim/");
    c.put_bytes("env/task", task_name(cfg_.task));
    c.put_bytes("env/params", params_.to_log_line());
    c.put_f64("env/bookkeeping", {6},
              {double(step_count_), released_ ? 1.0 : 0.0, double(hang_counter_), side_u_,
               side_v_, tape_y_});
    return c;
  }

  StepResult step(std::array<double, 4> action) {
    if (!active_) throw std::logic_error("env: step after episode end");
    for (double& a : action) a = std::clamp(a, -1.0, 1.0);
    world_.gripper.velocity =
        Vec3{action[0], action[1], action[2]} * cfg_.max_speed;
    const double aperture_vel = -action[3] * cfg_.aperture_rate;  // positive closes

    StepResult res;
    try {
      for (int s = 0; s < cfg_.sim_steps_per_control; ++s) {
        world_.step(cfg_.sim_dt(), cfg_.sim_substeps);
        const double prev = world_.gripper.aperture;
        const double next =
            std::clamp(prev + aperture_vel * cfg_.sim_dt(), 0.0, 1.0);
        world_.gripper.aperture = next;
        if (prev > cfg_.close_threshold && next <= cfg_.close_threshold)
          world_.attempt_grasp(rng_);
        if (prev < cfg_.open_threshold && next >= cfg_.open_threshold) {
          if (world_.gripper.state == sim::GripState::holding) released_ = true;
          world_.release();
        }
        update_hang_counter();
      }
    } catch (const SimInstabilityError&) {
      active_ = false;
      res.done = true;
      res.info.aborted = true;
      res.obs = observe();
      return res;
    }

    ++step_count_;
    if (check_success()) {
      res.reward = 100.0;
      res.done = true;
      res.info.success = true;
    } else if (step_count_ >= cfg_.episode_steps) {
      res.done = true;
    }
    if (res.done) active_ = false;
    res.obs = observe();
    return res;
  }

  /// Task success predicate on the current simulator state.
  ///  - tape: both lifted-side corners within the threshold of the tape line
  ///  - hanging: released, all corners >= 5 cm up for 20 consecutive sim steps
  ///  - diagonal: one diagonal corner pair folded together while every
  ///    same-side pair stays beyond 3/4 of the flat side length
  bool check_success() const {
    const auto c = world_.corners();
    switch (cfg_.task) {
      case Task::tape: {
        const double h = world_.rigid.table.height;
        // corners 0 and 1 span the lifted (y-min) edge
        for (int i : {0, 1}) {
          const double dy = c[std::size_t(i)].y - tape_y_;
          const double dz = c[std::size_t(i)].z - h;
          if (std::sqrt(dy * dy + dz * dz) > cfg_.tape_threshold) return false;
        }
        return true;
      }
      case Task::hanging:
        return released_ && hang_counter_ >= cfg_.hang_stable_steps;
      case Task::diagonal_folding:
      default: {
        const double d02 = (c[0] - c[2]).norm();
        const double d13 = (c[1] - c[3]).norm();
        if (std::min(d02, d13) > cfg_.diagonal_threshold) return false;
        const double su = cfg_.anti_crumple_fraction * side_u_;
        const double sv = cfg_.anti_crumple_fraction * side_v_;
        return (c[0] - c[1]).norm() > su && (c[2] - c[3]).norm() > su &&
               (c[1] - c[2]).norm() > sv && (c[3] - c[0]).norm() > sv;
      }
    }
  }

  double task_feature() const {
    switch (cfg_.task) {
      case Task::tape: return tape_y_;
      case Task::hanging: return world_.rigid.hanger ? world_.rigid.hanger->center.y : 0.0;
      default: return 0.0;
    }
  }

  ObservationBundle observe() const {
    ObservationBundle o;
    const auto corners = world_.corners();
    const auto& g = world_.gripper;
    o.lowdim = {g.position.x, g.position.y, g.position.z, g.aperture, task_feature()};
    o.full_state.reserve(17);
    for (const auto& c : corners) {
      o.full_state.push_back(c.x);
      o.full_state.push_back(c.y);
      o.full_state.push_back(c.z);
    }
    o.full_state.push_back(g.position.x);
    o.full_state.push_back(g.position.y);
    o.full_state.push_back(g.position.z);
    o.full_state.push_back(g.aperture);
    o.full_state.push_back(task_feature());
    if (cfg_.obs_mode != ObsMode::lowdim) {
      const Image img = render();
      o.image = img.data;
    }
    if (cfg_.obs_mode == ObsMode::image) o.lowdim.clear();
    return o;
  }

  Image render() const {
    CameraParams cam;
    cam.position = {params_.get("camera_pos_x"), params_.get("camera_pos_y"),
                    params_.get("camera_pos_z")};
    cam.look_at = {params_.get("camera_look_x"), params_.get("camera_look_y"),
                   params_.get("camera_look_z")};
    cam.focal_px = params_.get("camera_focal");
    cam.width = cfg_.image_w;
    cam.height = cfg_.image_h;
    LightParams light;
    light.position = {params_.get("light_x"), params_.get("light_y"), params_.get("light_z")};
    light.color = {params_.get("light_r"), params_.get("light_g"), params_.get("light_b")};
    SceneStyle style;
    style.cloth_color = {params_.get("cloth_r"), params_.get("cloth_g"), params_.get("cloth_b")};
    style.table_color = {params_.get("table_r"), params_.get("table_g"), params_.get("table_b")};
    style.table_color2 = {params_.get("table2_r"), params_.get("table2_g"),
                          params_.get("table2_b")};
    style.background = {params_.get("bg_r"), params_.get("bg_g"), params_.get("bg_b")};
    style.texture_scale = params_.get("texture_scale");
    style.texture_seed = std::uint64_t(params_.get("texture_seed"));
    Renderer r(cam, light, style);
    return r.render(world_);
  }

 private:
  void build_scene() {
    sim::ClothParams cp = cfg_.cloth;
    const double scale = params_.get("cloth_scale");
    cp.width *= scale;
    cp.height *= scale;
    cp.k_structural *= params_.get("stiffness_scale");
    cp.k_shear *= params_.get("stiffness_scale");
    cp.k_bend *= params_.get("stiffness_scale");
    cp.spring_damping *= params_.get("damping_scale");
    side_u_ = cp.width;
    side_v_ = cp.height;

    world_ = sim::ClothWorld();
    world_.params = cfg_.world;
    world_.params.workspace = cfg_.workspace;
    const Vec3 center{params_.get("cloth_center_x"), params_.get("cloth_center_y"), 0.0};
    world_.cloth = sim::Cloth::make_flat(cp, center, params_.get("cloth_yaw"));
    world_.rigid.table = {0.0, 0.6};

    if (cfg_.task == Task::tape) {
      const double frac = params_.get("tape_fraction");
      tape_y_ = (center.y - cp.height / 2.0) + frac * cp.height;
      world_.rigid.tape =
          sim::TapeMark{tape_y_, center.x - cp.width, center.x + cp.width};
      world_.gripper.finger_axis = sim::FingerAxis::y;
    } else {
      tape_y_ = 0.0;
      world_.gripper.finger_axis = sim::FingerAxis::x;
    }
    if (cfg_.task == Task::hanging) {
      const double top = params_.get("hanger_top_z");
      const double half_z = 0.015;
      world_.rigid.hanger = sim::HangerBox{
          {0.0, params_.get("hanger_y"), top - half_z},
          {params_.get("hanger_half_len"), 0.015, half_z}};
    }
    world_.rigid.validate();
    world_.gripper.position = cfg_.workspace.clamp(
        {params_.get("grip_spawn_x"), params_.get("grip_spawn_y"), params_.get("grip_spawn_z")});
    world_.gripper.aperture = 1.0;
    world_.gripper.state = sim::GripState::open;
  }

  void begin_bookkeeping(int step_count) {
    step_count_ = step_count;
    active_ = true;
    released_ = false;
    hang_counter_ = 0;
  }

  void update_hang_counter() {
    if (cfg_.task != Task::hanging) return;
    if (!released_ || world_.gripper.state == sim::GripState::holding) {
      hang_counter_ = 0;
      return;
    }
    const double min_z = world_.rigid.table.height + cfg_.hang_min_height;
    for (const auto& c : world_.corners()) {
      if (c.z < min_z) {
        hang_counter_ = 0;
        return;
      }
    }
    ++hang_counter_;
  }

  EnvConfig cfg_;
  sim::ClothWorld world_;
  Rng rng_{0};
  SampledParams params_;
  int step_count_ = 0;
  bool active_ = false;
  bool released_ = false;
  int hang_counter_ = 0;
  double side_u_ = 0.28, side_v_ = 0.28;
  double tape_y_ = 0.0;
};

}  // namespace clothrl::env
