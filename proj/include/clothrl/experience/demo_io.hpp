#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clothrl/core/errors.hpp"
#include "clothrl/experience/transition.hpp"

namespace clothrl::experience {

/// Observation dimensionalities carried in a demo file header.
struct DemoDims {
  std::size_t lowdim = 0;
  std::size_t image = 0;  // flattened size; 0 when images are absent
  std::size_t full_state = 0;
};

// Line-delimited demo persistence. Header line:
//   clothrl-demo v=1 lowdim=<d> image=<n> fullstate=<d>
// then one transition per line, fields in declaration order (actor obs,
// image, full state, action, reward, successors, done, is_demo), floats as
// decimal text with 17 significant digits so doubles round-trip exactly.
class DemoWriter {
 public:
  DemoWriter(const std::string& path, DemoDims dims) : f_(path, std::ios::trunc), dims_(dims) {
    if (!f_) throw FormatError("demo: cannot open for write: " + path);
    f_ << "clothrl-demo v=1 lowdim=" << dims.lowdim << " image=" << dims.image
       << " fullstate=" << dims.full_state << "\n";
  }

  void append(const Transition& t) {
    check(t.actor_obs.size(), dims_.lowdim, "actor_obs");
    check(t.actor_image.size(), dims_.image, "actor_image");
    check(t.full_state.size(), dims_.full_state, "full_state");
    check(t.next_actor_obs.size(), dims_.lowdim, "next_actor_obs");
    check(t.next_actor_image.size(), dims_.image, "next_actor_image");
    check(t.next_full_state.size(), dims_.full_state, "next_full_state");
    std::string line;
    append_all(line, t.actor_obs);
    append_all(line, t.actor_image);
    append_all(line, t.full_state);
    for (double a : t.action) append_num(line, a);
    append_num(line, t.reward);
    append_all(line, t.next_actor_obs);
    append_all(line, t.next_actor_image);
    append_all(line, t.next_full_state);
    line += t.done ? "1 " : "0 ";
    line += t.is_demo ? "1" : "0";
    f_ << line << "\n";
    if (!f_) throw FormatError("demo: write failed");
  }

 private:
  static void append_num(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g ", v);
    out += buf;
  }
  static void append_all(std::string& out, const std::vector<double>& v) {
    for (double x : v) append_num(out, x);
  }
  void check(std::size_t got, std::size_t want, const char* field) const {
    if (got != want)
      throw ShapeError(std::string("demo: field ") + field + " has wrong dimension");
  }

  std::ofstream f_;
  DemoDims dims_;
};

struct DemoFile {
  DemoDims dims;
  std::vector<std::vector<Transition>> episodes;  // split on done flags

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.size();
    return n;
  }
};

inline DemoFile load_demo_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("demo: cannot open: " + path);
  std::string header;
  if (!std::getline(f, header)) throw FormatError("demo: empty file: " + path);
  DemoFile out;
  {
    std::istringstream hs(header);
    std::string magic, ver, low, img, full;
    hs >> magic >> ver >> low >> img >> full;
    auto field = [&](const std::string& s, const std::string& key) -> std::size_t {
      if (s.rfind(key + "=", 0) != 0)
        throw FormatError("demo: bad header field '" + s + "' in " + path);
      return std::size_t(std::stoull(s.substr(key.size() + 1)));
    };
    if (magic != "clothrl-demo" || ver != "v=1")
      throw FormatError("demo: bad header in " + path);
    out.dims.lowdim = field(low, "lowdim");
    out.dims.image = field(img, "image");
    out.dims.full_state = field(full, "fullstate");
  }

  const std::size_t per_line = 2 * (out.dims.lowdim + out.dims.image + out.dims.full_state) +
                               4 + 1 + 2;
  std::vector<Transition> episode;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    vals.reserve(per_line);
    const char* p = line.c_str();
    char* end = nullptr;
    for (double v = std::strtod(p, &end); end != p; v = std::strtod(p, &end)) {
      vals.push_back(v);
      p = end;
    }
    if (vals.size() != per_line)
      throw FormatError("demo: " + path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(per_line) + " fields, got " + std::to_string(vals.size()));
    Transition t;
    std::size_t pos = 0;
    auto take = [&](std::size_t n) {
      std::vector<double> v(vals.begin() + pos, vals.begin() + pos + n);
      pos += n;
      return v;
    };
    t.actor_obs = take(out.dims.lowdim);
    t.actor_image = take(out.dims.image);
    t.full_state = take(out.dims.full_state);
    for (int j = 0; j < 4; ++j) t.action[j] = vals[pos++];
    t.reward = vals[pos++];
    t.next_actor_obs = take(out.dims.lowdim);
    t.next_actor_image = take(out.dims.image);
    t.next_full_state = take(out.dims.full_state);
    t.done = vals[pos++] != 0.0;
    t.is_demo = vals[pos++] != 0.0;
    episode.push_back(std::move(t));
    if (episode.back().done) {
      out.episodes.push_back(std::move(episode));
      episode.clear();
    }
  }
  if (!episode.empty())
    throw FormatError("demo: " + path + ": trailing transitions without a terminal step");
  return out;
}

}  // namespace clothrl::experience
