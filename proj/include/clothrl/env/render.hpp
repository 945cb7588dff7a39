#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "clothrl/core/errors.hpp"
#include "clothrl/core/vec3.hpp"
#include "clothrl/env/perlin.hpp"
#include "clothrl/sim/world.hpp"

namespace clothrl::env {

struct CameraParams {
  Vec3 position{0.7, 0.0, 0.45};
  Vec3 look_at{0.0, 0.0, 0.05};
  Vec3 up{0.0, 0.0, 1.0};
  double focal_px = 100.0;  // pinhole focal length in pixels
  int width = 84, height = 84;
};

struct LightParams {
  Vec3 position{0.5, -0.5, 1.0};
  Vec3 color{1.0, 1.0, 1.0};
  double ambient = 0.35;
};

struct SceneStyle {
  Vec3 cloth_color{0.85, 0.2, 0.2};
  Vec3 table_color{0.55, 0.45, 0.35};
  Vec3 table_color2{0.35, 0.3, 0.25};
  Vec3 hanger_color{0.3, 0.3, 0.35};
  Vec3 tape_color{0.05, 0.05, 0.05};
  Vec3 background{0.55, 0.65, 0.8};
  double texture_scale = 8.0;        // perlin frequency over world meters
  std::uint64_t texture_seed = 1;
  int texture_octaves = 3;
};

/// Row-major HWC image, channels in [0, 1].
struct Image {
  int width = 0, height = 0;
  std::vector<double> data;  // h*w*3

  double& at(int y, int x, int c) { return data[std::size_t((y * width + x) * 3 + c)]; }
  double at(int y, int x, int c) const { return data[std::size_t((y * width + x) * 3 + c)]; }
};

namespace detail {

struct Tri {
  Vec3 w0, w1, w2;   // world-space vertices
  Vec3 base_color;
  bool textured = false;   // perlin-modulated between base and color2
  Vec3 color2;
  bool two_sided = false;  // cloth shades both faces
};

struct Basis {
  Vec3 origin, right, up, forward;
};

inline Basis camera_basis(const CameraParams& cam) {
  const Vec3 fwd = (cam.look_at - cam.position).normalized();
  Vec3 right = fwd.cross(cam.up);
  if (right.norm() < 1e-9) right = fwd.cross(Vec3{0.0, 1.0, 0.0});
  right = right.normalized();
  const Vec3 up = right.cross(fwd);
  return {cam.position, right, up, fwd};
}

}  // namespace detail

/// Software rasterizer: z-buffered triangles, flat shading with one point
/// light, Perlin-textured table and cloth. Deterministic per state+params.
class Renderer {
 public:
  Renderer(const CameraParams& cam, const LightParams& light, const SceneStyle& style)
      : cam_(cam), light_(light), style_(style),
        noise_(style.texture_seed, style.texture_octaves) {
    if (!(cam.focal_px > 0.0)) throw std::invalid_argument("render: focal must be positive");
    if (cam.width <= 0 || cam.height <= 0)
      throw std::invalid_argument("render: image dims must be positive");
  }

  Image render(const sim::ClothWorld& world) const {
    std::vector<detail::Tri> tris;
    build_scene(world, tris);

    Image img;
    img.width = cam_.width;
    img.height = cam_.height;
    img.data.assign(std::size_t(cam_.width) * cam_.height * 3, 0.0);
    for (int y = 0; y < cam_.height; ++y)
      for (int x = 0; x < cam_.width; ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = pick(style_.background, c);

    std::vector<double> zbuf(std::size_t(cam_.width) * cam_.height,
                             std::numeric_limits<double>::infinity());
    const auto basis = detail::camera_basis(cam_);
    for (const auto& t : tris) raster(t, basis, img, zbuf);
    return img;
  }

 private:
  struct Projected {
    double u, v, inv_z;
    bool ok;
  };

  Projected project(const detail::Basis& b, const Vec3& p) const {
    const Vec3 d = p - b.origin;
    const double z = d.dot(b.forward);
    if (z < 0.02) return {0, 0, 0, false};
    const double x = d.dot(b.right);
    const double y = d.dot(b.up);
    return {cam_.width / 2.0 + cam_.focal_px * x / z,
            cam_.height / 2.0 - cam_.focal_px * y / z, 1.0 / z, true};
  }

  static double pick(const Vec3& v, int c) { return c == 0 ? v.x : (c == 1 ? v.y : v.z); }

  void raster(const detail::Tri& t, const detail::Basis& basis, Image& img,
              std::vector<double>& zbuf) const {
    const Projected p0 = project(basis, t.w0);
    const Projected p1 = project(basis, t.w1);
    const Projected p2 = project(basis, t.w2);
    if (!p0.ok || !p1.ok || !p2.ok) return;

    const double area =
        (p1.u - p0.u) * (p2.v - p0.v) - (p2.u - p0.u) * (p1.v - p0.v);
    if (std::abs(area) < 1e-12) return;

    const int x0 = std::max(0, int(std::floor(std::min({p0.u, p1.u, p2.u}))));
    const int x1 = std::min(cam_.width - 1, int(std::ceil(std::max({p0.u, p1.u, p2.u}))));
    const int y0 = std::max(0, int(std::floor(std::min({p0.v, p1.v, p2.v}))));
    const int y1 = std::min(cam_.height - 1, int(std::ceil(std::max({p0.v, p1.v, p2.v}))));
    if (x0 > x1 || y0 > y1) return;

    // flat shading from the world-space normal
    Vec3 n = (t.w1 - t.w0).cross(t.w2 - t.w0);
    const double nn = n.norm();
    if (nn < 1e-15) return;
    n = n / nn;
    const Vec3 centroid = (t.w0 + t.w1 + t.w2) / 3.0;
    const Vec3 ldir = (light_.position - centroid).normalized();
    double diffuse = n.dot(ldir);
    if (t.two_sided) diffuse = std::abs(diffuse);
    diffuse = std::max(0.0, diffuse);
    const double lum = light_.ambient + (1.0 - light_.ambient) * diffuse;

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        const double w0 = ((p1.u - px) * (p2.v - py) - (p2.u - px) * (p1.v - py)) / area;
        const double w1 = ((p2.u - px) * (p0.v - py) - (p0.u - px) * (p2.v - py)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double inv_z = w0 * p0.inv_z + w1 * p1.inv_z + w2 * p2.inv_z;
        const double z = 1.0 / inv_z;
        double& zb = zbuf[std::size_t(y * cam_.width + x)];
        if (z >= zb) continue;
        zb = z;
        // perspective-correct world position for texturing
        Vec3 wp = (t.w0 * (w0 * p0.inv_z) + t.w1 * (w1 * p1.inv_z) + t.w2 * (w2 * p2.inv_z)) * z;
        Vec3 color = t.base_color;
        if (t.textured) {
          const double s = 0.5 * (noise_(wp.x * style_.texture_scale,
                                         wp.y * style_.texture_scale) + 1.0);
          color = t.base_color * (1.0 - s) + t.color2 * s;
        }
        for (int c = 0; c < 3; ++c)
          img.at(y, x, c) =
              std::clamp(pick(color, c) * pick(light_.color, c) * lum, 0.0, 1.0);
      }
    }
  }

  void build_scene(const sim::ClothWorld& world, std::vector<detail::Tri>& tris) const {
    // table
    const double h = world.rigid.table.height;
    const Vec3 t0{-0.8, -0.8, h}, t1{0.8, -0.8, h}, t2{0.8, 0.8, h}, t3{-0.8, 0.8, h};
    tris.push_back({t0, t1, t2, style_.table_color, true, style_.table_color2, false});
    tris.push_back({t0, t2, t3, style_.table_color, true, style_.table_color2, false});

    if (world.rigid.tape) {
      const auto& tape = *world.rigid.tape;
      const double z = h + 5e-4;
      const double half_w = 0.006;
      const Vec3 a{tape.x_min, tape.y - half_w, z}, b{tape.x_max, tape.y - half_w, z};
      const Vec3 c{tape.x_max, tape.y + half_w, z}, d{tape.x_min, tape.y + half_w, z};
      tris.push_back({a, b, c, style_.tape_color, false, {}, false});
      tris.push_back({a, c, d, style_.tape_color, false, {}, false});
    }

    if (world.rigid.hanger) add_box(*world.rigid.hanger, tris);

    // cloth grid cells -> two triangles each, two-sided shading
    const auto& cloth = world.cloth;
    const auto& x = cloth.positions();
    const int nu = cloth.params().nu, nv = cloth.params().nv;
    for (int iv = 0; iv + 1 < nv; ++iv) {
      for (int iu = 0; iu + 1 < nu; ++iu) {
        const Vec3& a = x[std::size_t(cloth.index(iu, iv))];
        const Vec3& b = x[std::size_t(cloth.index(iu + 1, iv))];
        const Vec3& c = x[std::size_t(cloth.index(iu + 1, iv + 1))];
        const Vec3& d = x[std::size_t(cloth.index(iu, iv + 1))];
        tris.push_back({a, b, c, style_.cloth_color, false, {}, true});
        tris.push_back({a, c, d, style_.cloth_color, false, {}, true});
      }
    }

    // gripper: small box around the tool point
    sim::HangerBox g{world.gripper.position, {0.012, 0.012, 0.02}};
    add_box(g, tris, Vec3{0.15, 0.15, 0.18});
  }

  void add_box(const sim::HangerBox& box, std::vector<detail::Tri>& tris,
               Vec3 color = Vec3{-1, -1, -1}) const {
    if (color.x < 0) color = style_.hanger_color;
    const Vec3& c = box.center;
    const Vec3& e = box.half_extents;
    Vec3 v[8];
    for (int i = 0; i < 8; ++i)
      v[i] = Vec3{c.x + ((i & 1) ? e.x : -e.x), c.y + ((i & 2) ? e.y : -e.y),
                  c.z + ((i & 4) ? e.z : -e.z)};
    const int faces[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                             {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    for (const auto& f : faces) {
      tris.push_back({v[f[0]], v[f[1]], v[f[2]], color, false, {}, false});
      tris.push_back({v[f[0]], v[f[2]], v[f[3]], color, false, {}, false});
    }
  }

  CameraParams cam_;
  LightParams light_;
  SceneStyle style_;
  PerlinField noise_;
};

/// 8-bit binary PPM dump for render-episode frames.
inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("render: cannot write " + path);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.data) {
    const int byte = std::clamp(int(v * 255.0 + 0.5), 0, 255);
    f.put(char(byte));
  }
}

}  // namespace clothrl::env
