#include "sesn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "sesn/errors.hpp"

namespace sesn {

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < classes; ++k) n += at(k, k);
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes; ++p) n += at(truth, p);
  return n;
}

Real ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<Real>(trace()) / static_cast<Real>(n);
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t classes) {
  if (preds.size() != truths.size())
    throw InputError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(truths.size()) + " labels");
  ConfusionMatrix cm{classes, std::vector<std::size_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = truths[i];
    if (p < 0 || t < 0 || static_cast<std::size_t>(p) >= classes || static_cast<std::size_t>(t) >= classes)
      throw InputError("confusion: class id out of range at item " + std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return cm;
}

namespace {

std::string label_of(const std::vector<std::string>& labels, std::size_t k) {
  return k < labels.size() ? labels[k] : std::to_string(k);
}

std::string format_p(Real p) {
  std::ostringstream os;
  os << std::setprecision(6) << p;
  return os.str();
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "true\\predicted";
  for (std::size_t p = 0; p < cm.classes; ++p) os << ',' << label_of(labels, p);
  os << '\n';
  for (std::size_t t = 0; t < cm.classes; ++t) {
    os << label_of(labels, t);
    for (std::size_t p = 0; p < cm.classes; ++p) os << ',' << cm.at(t, p);
    os << '\n';
  }
  return os.str();
}

std::string confusion_text(const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
  std::size_t name_w = 4;
  for (std::size_t k = 0; k < cm.classes; ++k) name_w = std::max(name_w, label_of(labels, k).size());
  std::size_t cell_w = 5;
  for (auto c : cm.counts) cell_w = std::max(cell_w, std::to_string(c).size() + 1);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "" << std::right;
  for (std::size_t p = 0; p < cm.classes; ++p) os << std::setw(static_cast<int>(cell_w)) << p;
  os << '\n';
  for (std::size_t t = 0; t < cm.classes; ++t) {
    os << std::left << std::setw(static_cast<int>(name_w)) << label_of(labels, t) << std::right;
    for (std::size_t p = 0; p < cm.classes; ++p) os << std::setw(static_cast<int>(cell_w)) << cm.at(t, p);
    os << '\n';
  }
  os << "accuracy " << std::fixed << std::setprecision(4) << cm.accuracy() << " (" << cm.trace() << "/"
     << cm.total() << ")\n";
  return os.str();
}

ContingencyTable contingency(const std::vector<bool>& a_correct, const std::vector<bool>& b_correct) {
  if (a_correct.size() != b_correct.size())
    throw InputError("mcnemar: correctness vectors have lengths " + std::to_string(a_correct.size()) + " and " +
                     std::to_string(b_correct.size()));
  ContingencyTable t;
  for (std::size_t i = 0; i < a_correct.size(); ++i) {
    if (a_correct[i] && b_correct[i])
      ++t.both_right;
    else if (a_correct[i])
      ++t.only_a;
    else if (b_correct[i])
      ++t.only_b;
    else
      ++t.both_wrong;
  }
  return t;
}

std::string_view to_string(McNemarMethod m) {
  return m == McNemarMethod::chi2_corrected ? "chi2_corrected" : "exact_binomial";
}

Real chi2_1_survival(Real x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

Real exact_binomial_p(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t k_max = std::min(b, c);
  const Real ln_half_n = static_cast<Real>(n) * std::log(0.5);
  const Real ln_n_fact = std::lgamma(static_cast<Real>(n) + 1.0);
  Real tail = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    const Real ln_choose =
        ln_n_fact - std::lgamma(static_cast<Real>(k) + 1.0) - std::lgamma(static_cast<Real>(n - k) + 1.0);
    tail += std::exp(ln_choose + ln_half_n);
  }
  return std::min(1.0, 2.0 * tail);
}

McNemarResult mcnemar(const ContingencyTable& t) {
  McNemarResult r;
  r.b = t.only_a;
  r.c = t.only_b;
  const std::size_t n = r.b + r.c;
  if (n == 0) {
    r.degenerate = true;
    r.p_value = 1.0;
    r.statistic = 0.0;
    r.method = McNemarMethod::exact_binomial;
  } else if (n >= kChiSquareMinDiscordant) {
    const Real diff = std::max(0.0, std::abs(static_cast<Real>(r.b) - static_cast<Real>(r.c)) - 1.0);
    r.statistic = diff * diff / static_cast<Real>(n);
    r.p_value = chi2_1_survival(r.statistic);
    r.method = McNemarMethod::chi2_corrected;
  } else {
    r.statistic = static_cast<Real>(std::min(r.b, r.c));
    r.p_value = exact_binomial_p(r.b, r.c);
    r.method = McNemarMethod::exact_binomial;
  }
  r.significant_at_0_05 = r.p_value < 0.05;
  return r;
}

McNemarResult mcnemar(const std::vector<bool>& a_correct, const std::vector<bool>& b_correct) {
  return mcnemar(contingency(a_correct, b_correct));
}

std::size_t SignificanceGrid::populated_pairs() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) n += at(i, j).has_value();
  return n;
}

SignificanceGrid significance_grid(const std::vector<std::string>& names,
                                   const std::vector<std::vector<bool>>& systems) {
  if (systems.size() < 2) throw InputError("significance grid needs at least two systems");
  if (names.size() != systems.size()) throw InputError("significance grid: one name per system required");
  for (std::size_t i = 1; i < systems.size(); ++i)
    if (systems[i].size() != systems[0].size())
      throw InputError("significance grid: system '" + names[i] + "' has " + std::to_string(systems[i].size()) +
                       " items, '" + names[0] + "' has " + std::to_string(systems[0].size()));
  const std::size_t n = systems.size();
  SignificanceGrid g{names, std::vector<std::optional<McNemarResult>>(n * n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const McNemarResult r = mcnemar(systems[i], systems[j]);
      McNemarResult mirrored = r;
      std::swap(mirrored.b, mirrored.c);
      g.cells[i * n + j] = r;
      g.cells[j * n + i] = mirrored;
    }
  return g;
}

std::string grid_csv(const SignificanceGrid& g) {
  std::ostringstream os;
  os << "system_a,system_b,b,c,statistic,p_value,method,significant\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.names.size(); ++i)
    for (std::size_t j = i + 1; j < g.names.size(); ++j) {
      const auto& r = *g.at(i, j);
      os << g.names[i] << ',' << g.names[j] << ',' << r.b << ',' << r.c << ',' << r.statistic << ','
         << r.p_value << ',' << to_string(r.method) << ',' << (r.significant_at_0_05 ? 1 : 0) << '\n';
    }
  return os.str();
}

std::string grid_text(const SignificanceGrid& g) {
  std::size_t w = 10;
  for (const auto& n : g.names) w = std::max(w, n.size() + 2);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "";
  for (const auto& n : g.names) os << std::setw(static_cast<int>(w)) << n;
  os << '\n';
  for (std::size_t i = 0; i < g.names.size(); ++i) {
    os << std::setw(static_cast<int>(w)) << g.names[i];
    for (std::size_t j = 0; j < g.names.size(); ++j) {
      std::string cell = "-";
      if (const auto& r = g.at(i, j)) cell = format_p(r->p_value) + (r->significant_at_0_05 ? "*" : "");
      os << std::setw(static_cast<int>(w)) << cell;
    }
    os << '\n';
  }
  os << "* p < 0.05 (McNemar; continuity-corrected chi-square when b + c >= " << kChiSquareMinDiscordant
     << ", exact binomial otherwise)\n";
  return os.str();
}

std::string format_correctness(const CorrectnessVector& v) {
  std::ostringstream os;
  os << "# checkpoint=" << v.checkpoint << '\n';
  os << "# dataset=" << std::hex << std::setw(16) << std::setfill('0') << v.dataset_hash << std::dec << '\n';
  for (bool b : v.values) os << (b ? '1' : '0') << '\n';
  return os.str();
}

CorrectnessVector parse_correctness(const std::string& text, const std::string& what) {
  CorrectnessVector v;
  bool have_hash = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# checkpoint=", 0) == 0) v.checkpoint = line.substr(13);
      if (line.rfind("# dataset=", 0) == 0) {
        try {
          v.dataset_hash = std::stoull(line.substr(10), nullptr, 16);
        } catch (const std::exception&) {
          throw ParseError(what + ":" + std::to_string(lineno) + ": malformed dataset hash");
        }
        have_hash = true;
      }
      continue;
    }
    if (line == "1")
      v.values.push_back(true);
    else if (line == "0")
      v.values.push_back(false);
    else
      throw ParseError(what + ":" + std::to_string(lineno) + ": expected 0 or 1, found '" + line + "'");
  }
  if (!have_hash) throw ParseError(what + ": missing '# dataset=' header");
  return v;
}

void save_correctness(const std::string& path, const CorrectnessVector& v) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << format_correctness(v);
}

CorrectnessVector load_correctness(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open correctness file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_correctness(ss.str(), path);
}

}  // namespace sesn
