#include "mnlink/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "mnlink/errors.hpp"

namespace mnlink {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: " + key + " expects a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

std::pair<double, double> to_interval(const std::string& v, const std::string& key) {
  const auto parts = split_ws(v);
  if (parts.size() != 2)
    throw ValidationError("config: " + key + " expects 'lo hi', got '" + v + "'");
  const double lo = to_double(parts[0], key);
  const double hi = to_double(parts[1], key);
  if (!(hi > lo)) throw ValidationError("config: " + key + " needs hi > lo");
  return {lo, hi};
}

Term parse_term(const std::string& tok, const std::string& key) {
  if (tok == "1") return Term::intercept();
  const auto star = tok.find('*');
  auto covariate_index = [&](const std::string& t) {
    if (t.size() < 2 || t[0] != 'x')
      throw ValidationError("config: " + key + ": bad term '" + tok + "'");
    const int i = to_int(t.substr(1), key);
    if (i < 1) throw ValidationError("config: " + key + ": bad covariate index in '" + tok + "'");
    return i - 1;
  };
  if (star == std::string::npos) return Term::covariate(covariate_index(tok));
  return Term::product(covariate_index(tok.substr(0, star)),
                       covariate_index(tok.substr(star + 1)));
}

}  // namespace

AlphaId parse_alpha_token(const std::string& token, int q) {
  // accepted spellings: a11, alpha11, alpha_11
  std::string digits;
  if (token.rfind("alpha_", 0) == 0) {
    digits = token.substr(6);
  } else if (token.rfind("alpha", 0) == 0) {
    digits = token.substr(5);
  } else if (token.rfind('a', 0) == 0) {
    digits = token.substr(1);
  }
  if (digits.size() != 2 || digits[0] < '1' || digits[1] < '1' || digits[1] > '2')
    throw ValidationError("link parameter '" + token + "' not recognized (use e.g. a11)");
  const int j = digits[0] - '1';
  const int k = digits[1] - '1';
  if (j >= q) throw ValidationError("link parameter '" + token + "' names a missing category");
  return {j, k};
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin,
                               const std::vector<std::string>& overrides) {
  // collect key = value pairs; later duplicates win, overrides last
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ValidationError("--set expects key=value, got '" + ov + "'");
    entries.emplace_back(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }

  RunConfig cfg;
  std::map<int, std::vector<Term>> term_map;
  for (const auto& [key, value] : entries) {
    if (key == "data.path") {
      cfg.data_path = value;
    } else if (key.rfind("model.terms.", 0) == 0) {
      const int cat = to_int(key.substr(12), key);
      if (cat < 1) throw ValidationError("config: bad category index in " + key);
      std::vector<Term> terms;
      for (const auto& tok : split_ws(value)) terms.push_back(parse_term(tok, key));
      term_map[cat] = terms;
    } else if (key == "link.family") {
      if (value != "czado" && value != "logit")
        throw ValidationError("config: link.family must be czado or logit");
      cfg.link_family = value;
    } else if (key == "link.standardization") {
      if (value != "intercepts" && value != "zero")
        throw ValidationError("config: link.standardization must be intercepts or zero");
      cfg.standardization = value;
    } else if (key == "link.active") {
      cfg.active = value;
    } else if (key == "fit.method") {
      if (value != "scoring" && value != "grid")
        throw ValidationError("config: fit.method must be scoring or grid");
      cfg.fit_method = value;
    } else if (key == "fit.tol") {
      cfg.fit_options.tol = to_double(value, key);
    } else if (key == "fit.max_iter") {
      cfg.fit_options.max_iter = to_int(value, key);
    } else if (key == "fit.step_halvings") {
      cfg.fit_options.max_step_halvings = to_int(value, key);
    } else if (key == "fit.grid.min") {
      cfg.grid_min = to_double(value, key);
    } else if (key == "fit.grid.max") {
      cfg.grid_max = to_double(value, key);
    } else if (key == "fit.grid.step") {
      cfg.grid_step = to_double(value, key);
    } else if (key == "percentile.pi0") {
      cfg.pi0.clear();
      for (const auto& tok : split_ws(value)) cfg.pi0.push_back(to_double(tok, key));
    } else if (key == "percentile.tau_prime") {
      cfg.tau_prime = to_double(value, key);
      if (!(cfg.tau_prime > 0.0 && cfg.tau_prime < 1.0))
        throw ValidationError("config: percentile.tau_prime must be in (0,1)");
    } else if (key == "percentile.window.x1") {
      cfg.window_x1 = to_interval(value, key);
    } else if (key == "percentile.window.x2") {
      cfg.window_x2 = to_interval(value, key);
    } else if (key == "percentile.trace.n1") {
      cfg.trace_n1 = to_int(value, key);
    } else if (key == "percentile.trace.n2") {
      cfg.trace_n2 = to_int(value, key);
    } else if (key == "region.methods") {
      cfg.region_methods = split_ws(value);
      for (const auto& m : cfg.region_methods)
        if (m != "conservative" && m != "lr" && m != "score")
          throw ValidationError("config: unknown region method '" + m + "'");
      if (cfg.region_methods.empty())
        throw ValidationError("config: region.methods must not be empty");
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else {
      throw ValidationError(origin + ": unknown config key '" + key + "'");
    }
  }

  if (cfg.data_path.empty()) throw ValidationError(origin + ": data.path is required");
  if (term_map.empty()) throw ValidationError(origin + ": model.terms.<j> entries are required");
  int expect = 1;
  for (const auto& [cat, terms] : term_map) {
    if (cat != expect)
      throw ValidationError(origin + ": model.terms must cover categories 1..q contiguously");
    cfg.terms.push_back(terms);
    ++expect;
  }
  if (cfg.active != "none" && cfg.active != "auto") {
    if (cfg.link_family == "logit")
      throw ValidationError(origin + ": the logit link has no link parameters to activate");
    for (const auto& tok : split_ws(cfg.active))
      parse_alpha_token(tok, static_cast<int>(cfg.terms.size()));  // validates
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path, overrides);
}

ModelSpec RunConfig::model_spec() const { return ModelSpec(terms); }

StandardizationMode RunConfig::standardization_mode() const {
  return standardization == "zero" ? StandardizationMode::AtZero
                                   : StandardizationMode::AtIntercepts;
}

std::vector<AlphaId> RunConfig::active_ids() const {
  std::vector<AlphaId> ids;
  if (active == "none" || active == "auto") return ids;
  std::istringstream in(active);
  std::string tok;
  while (in >> tok) ids.push_back(parse_alpha_token(tok, static_cast<int>(terms.size())));
  return ids;
}

MultinomialLink RunConfig::link() const {
  const int q = static_cast<int>(terms.size());
  std::vector<GeneratingFamily> families(static_cast<std::size_t>(q));
  if (link_family == "czado")
    for (auto& f : families) f.kind = FamilyKind::CzadoTwoSided;
  for (const auto& [j, k] : active_ids())
    families[static_cast<std::size_t>(j)].active[static_cast<std::size_t>(k)] = true;
  return MultinomialLink{families, standardization_mode()};
}

PercentileQuery RunConfig::percentile_query() const {
  PercentileQuery query;
  query.pi0 = Eigen::Map<const Eigen::VectorXd>(pi0.data(), static_cast<Eigen::Index>(pi0.size()));
  query.tau_prime = tau_prime;
  query.window = {window_x1, window_x2};
  query.trace_n1 = trace_n1;
  query.trace_n2 = trace_n2;
  return query;
}

}  // namespace mnlink
