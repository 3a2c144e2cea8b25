#ifndef MNLINK_CONFIG_HPP
#define MNLINK_CONFIG_HPP

#include <string>
#include <utility>
#include <vector>

#include "mnlink/fit.hpp"
#include "mnlink/link.hpp"
#include "mnlink/model.hpp"
#include "mnlink/regions.hpp"

namespace mnlink {

// Run configuration, parsed from a dotted-key config file:
//
//   # comment
//   data.path = data/gennings1994.csv
//   model.terms.1 = 1 x1 x2
//   link.family = czado
//   link.active = a11 a12
//
// Keys form a tree through the dots; unknown keys are rejected.  Command line
// --set key=value assignments override file values leaf by leaf.
struct RunConfig {
  std::string data_path;
  std::vector<std::vector<Term>> terms;  // per category

  std::string link_family = "czado";             // czado | logit
  std::string standardization = "intercepts";    // intercepts | zero
  std::string active = "none";                   // none | auto | "a11 a12 ..."

  std::string fit_method = "scoring";            // scoring | grid
  FitOptions fit_options;
  double grid_min = -3.0;
  double grid_max = 3.0;
  double grid_step = 0.1;

  std::vector<double> pi0;
  double tau_prime = 0.05;
  std::pair<double, double> window_x1{-1.0, 1.0};
  std::pair<double, double> window_x2{-1.0, 1.0};
  int trace_n1 = 21;
  int trace_n2 = 1000;
  std::vector<std::string> region_methods{"conservative", "lr", "score"};

  std::string output_dir = "out";

  // Parse a file plus --set overrides.  Throws ParseError / ValidationError.
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
  static RunConfig from_text(const std::string& text, const std::string& origin,
                             const std::vector<std::string>& overrides = {});

  ModelSpec model_spec() const;
  StandardizationMode standardization_mode() const;

  // Link with the family kind and the configured mask ("auto" starts
  // all-pinned; stepwise selection decides later).
  MultinomialLink link() const;
  bool auto_mask() const { return active == "auto"; }

  // Explicit mask entries parsed from `active` ("a11 a12" style).
  std::vector<AlphaId> active_ids() const;

  PercentileQuery percentile_query() const;
};

// "a11" -> (0, 0); "a21" -> (1, 0).  Throws ValidationError on bad tokens.
AlphaId parse_alpha_token(const std::string& token, int q);

}  // namespace mnlink

#endif
