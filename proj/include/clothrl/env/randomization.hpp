#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "clothrl/core/errors.hpp"
#include "clothrl/core/rng.hpp"

namespace clothrl::env {

/// One randomized scalar: constant, uniform bounds, normal(mean, std), or a
/// uniform choice among three values (tape positions). Samples clamp to the
/// declared hard range.
struct Dist {
  enum class Kind { constant, uniform, normal, choice3 };
  Kind kind = Kind::constant;
  double a = 0.0, b = 0.0, c = 0.0;  // value / bounds / mean,std / choices
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static Dist constant(double v) { return {Kind::constant, v, 0.0, 0.0}; }
  static Dist uniform(double a, double b) { return {Kind::uniform, a, b, 0.0}; }
  static Dist normal(double mean, double std) { return {Kind::normal, mean, std, 0.0}; }
  static Dist choice3(double v0, double v1, double v2) { return {Kind::choice3, v0, v1, v2}; }

  Dist clamped(double lo_, double hi_) const {
    Dist d = *this;
    d.lo = lo_;
    d.hi = hi_;
    return d;
  }

  double sample(Rng& rng) const {
    double v = 0.0;
    switch (kind) {
      case Kind::constant:
        v = a;
        break;
      case Kind::uniform:
        v = rng.uniform(a, b);
        break;
      case Kind::normal:
        v = rng.normal(a, b);
        break;
      case Kind::choice3: {
        const auto i = rng.uniform_index(3);
        v = i == 0 ? a : (i == 1 ? b : c);
        break;
      }
    }
    return std::min(std::max(v, lo), hi);
  }

  std::string serialize() const {
    char buf[160];
    const char* name = kind == Kind::constant  ? "const"
                       : kind == Kind::uniform ? "uniform"
                       : kind == Kind::normal  ? "normal"
                                               : "choice3";
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g", name, a, b, c, lo, hi);
    return buf;
  }

  static Dist parse(const std::string& s) {
    char name[32];
    Dist d;
    const int n = std::sscanf(s.c_str(), "%31[^,],%lg,%lg,%lg,%lg,%lg", name, &d.a, &d.b, &d.c,
                              &d.lo, &d.hi);
    const std::string kind = name;
    if (n < 2) throw ConfigError("randomization: cannot parse distribution '" + s + "'");
    if (kind == "const")
      d.kind = Kind::constant;
    else if (kind == "uniform")
      d.kind = Kind::uniform;
    else if (kind == "normal")
      d.kind = Kind::normal;
    else if (kind == "choice3")
      d.kind = Kind::choice3;
    else
      throw ConfigError("randomization: unknown distribution kind '" + kind + "'");
    if (n < 6) {
      d.lo = -std::numeric_limits<double>::infinity();
      d.hi = std::numeric_limits<double>::infinity();
    }
    return d;
  }
};

/// Ordered set of named per-parameter distributions.
class RandomizationSpec {
 public:
  void set(const std::string& name, Dist d) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      index_[name] = entries_.size();
      entries_.emplace_back(name, d);
    } else {
      entries_[it->second].second = d;
    }
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const Dist& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ConfigError("randomization: unknown parameter '" + name + "'");
    return entries_[it->second].second;
  }
  const std::vector<std::pair<std::string, Dist>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Dist>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// One episode's sampled parameter set, in spec order.
class SampledParams {
 public:
  void set(const std::string& name, double v) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      index_[name] = entries_.size();
      entries_.emplace_back(name, v);
    } else {
      entries_[it->second].second = v;
    }
  }
  double get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ConfigError("randomization: sampled set is missing '" + name + "'");
    return entries_[it->second].second;
  }
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

  /// Line format: space-separated name=value pairs, values as %.17g.
  std::string to_log_line() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      if (!out.empty()) out += ' ';
      out += k;
      out += '=';
      out += buf;
    }
    return out;
  }

  static SampledParams from_log_line(const std::string& line) {
    SampledParams p;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const auto sp = line.find(' ', pos);
      const std::string tok = line.substr(pos, sp == std::string::npos ? sp : sp - pos);
      pos = sp == std::string::npos ? line.size() : sp + 1;
      if (tok.empty()) continue;
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw FormatError("randomization: bad log token '" + tok + "'");
      p.set(tok.substr(0, eq), std::strtod(tok.c_str() + eq + 1, nullptr));
    }
    return p;
  }

 private:
  std::vector<std::pair<std::string, double>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Draws every parameter from its declared distribution, in declaration
/// order. The full sampled set is returned for logging.
inline SampledParams randomize(const RandomizationSpec& spec, Rng& rng) {
  SampledParams out;
  for (const auto& [name, dist] : spec.entries()) out.set(name, dist.sample(rng));
  return out;
}

}  // namespace clothrl::env
