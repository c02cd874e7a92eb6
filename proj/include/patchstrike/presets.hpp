#pragma once

#include <algorithm>
#include <cctype>
#include <string>

#include "patchstrike/attack.hpp"
#include "patchstrike/errors.hpp"

namespace patchstrike {

/// Project-kernel size presets: 3x3 against normally trained targets, 7x7
/// against the adversarially trained proxies, 21x21 for the cross-family
/// case (normal substitute attacking a hardened target).
enum class TargetClass { kNormal, kDefense, kCrossFamily };

inline int proj_kernel_for_target(TargetClass t) {
  switch (t) {
    case TargetClass::kNormal: return 3;
    case TargetClass::kDefense: return 7;
    case TargetClass::kCrossFamily: return 21;
  }
  throw ConfigError("bad target class");
}

namespace detail {

inline std::string canonical_preset(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  // "MPI" and "MPI-FGSM" are the same preset
  const std::string suffix = "-FGSM";
  if (s.size() > suffix.size() &&
      s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0 &&
      s != "I-FGSM")
    s = s.substr(0, s.size() - suffix.size());
  if (s == "I-FGSM") s = "I";
  return s;
}

}  // namespace detail

/// Expand a named attack to its flag set and default parameters: eps = 16,
/// T = 10, mu = 1.0, p = 0.7, 15x15 smoothing kernel; the patchwise presets
/// carry their published amplification/projection pairs (beta = 10 with
/// gamma = 16, or beta = 2.5 with gamma = 2 when input diversity is in
/// play). The "A" family only amplifies the step size.
inline AttackConfig expand_preset(const std::string& name) {
  AttackConfig cfg;
  cfg.name = name;
  cfg.eps_pixels = 16.0f;
  cfg.iterations = 10;
  cfg.beta = 1.0f;
  cfg.gamma_pixels = 16.0f;
  cfg.mu = 1.0f;
  cfg.prob = 0.7f;
  cfg.ti_kernel_size = 15;
  cfg.proj_kernel_size = proj_kernel_for_target(TargetClass::kNormal);

  const std::string p = detail::canonical_preset(name);
  if (p == "FGSM") {
    cfg.iterations = 1;
  } else if (p == "I") {
    // plain iterative baseline: defaults as-is
  } else if (p == "MI") {
    cfg.flags.momentum = true;
  } else if (p == "DI") {
    cfg.flags.diversity = true;
  } else if (p == "TI") {
    cfg.flags.translation = true;
    cfg.iterations = 1;
  } else if (p == "TI-BIM") {
    cfg.flags.translation = true;
  } else if (p == "PI") {
    cfg.flags.patchwise = true;
    cfg.beta = 10.0f;
  } else if (p == "MPI") {
    cfg.flags = {.momentum = true, .patchwise = true};
    cfg.beta = 10.0f;
  } else if (p == "DPI") {
    cfg.flags = {.diversity = true, .patchwise = true};
    cfg.beta = 2.5f;
    cfg.gamma_pixels = 2.0f;
  } else if (p == "TPI") {
    cfg.flags = {.translation = true, .patchwise = true};
    cfg.beta = 10.0f;
  } else if (p == "DMPI") {
    cfg.flags = {.momentum = true, .diversity = true, .patchwise = true};
    cfg.beta = 2.5f;
    cfg.gamma_pixels = 2.0f;
  } else if (p == "DTPI") {
    cfg.flags = {.diversity = true, .translation = true, .patchwise = true};
    cfg.beta = 10.0f;
  } else if (p == "DTMI") {
    cfg.flags = {.momentum = true, .diversity = true, .translation = true};
  } else if (p == "AI") {
    cfg.beta = 10.0f;
  } else if (p == "AMI") {
    cfg.flags.momentum = true;
    cfg.beta = 10.0f;
  } else if (p == "ADI") {
    cfg.flags.diversity = true;
    cfg.beta = 10.0f;
  } else if (p == "ATI") {
    cfg.flags.translation = true;
    cfg.beta = 10.0f;
  } else {
    throw ConfigError("unknown attack preset '" + name + "'");
  }
  return cfg;
}

inline const std::vector<std::string>& all_preset_names() {
  static const std::vector<std::string> names{
      "FGSM", "I-FGSM", "MI-FGSM", "DI-FGSM", "TI-FGSM", "TI-BIM",
      "PI-FGSM", "MPI-FGSM", "DPI-FGSM", "TPI-FGSM", "DMPI-FGSM",
      "DTPI-FGSM", "DTMI-FGSM", "AI-FGSM", "AMI-FGSM", "ADI-FGSM",
      "ATI-FGSM"};
  return names;
}

}  // namespace patchstrike
