#include "ibia/uai_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ibia {

namespace {

class Tokenizer {
 public:
  Tokenizer(std::string text, std::string name)
      : text_(std::move(text)), name_(std::move(name)) {}

  bool next(std::string& tok) {
    while (pos_ < text_.size() && std::isspace((unsigned char)text_[pos_])) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace((unsigned char)text_[pos_]))
      ++pos_;
    tok = text_.substr(start, pos_ - start);
    return true;
  }

  std::string expect() {
    std::string tok;
    if (!next(tok)) fail("unexpected end of file");
    return tok;
  }

  long expect_int(const char* what) {
    std::string tok = expect();
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (...) {
      used = 0;
    }
    if (used != tok.size())
      fail(std::string("expected integer for ") + what + ", got '" + tok + "'");
    return v;
  }

  double expect_double(const char* what) {
    std::string tok = expect();
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (...) {
      used = 0;
    }
    if (used != tok.size())
      fail(std::string("expected number for ") + what + ", got '" + tok + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error(what, name_, line_);
  }

  long line() const { return line_; }

 private:
  std::string text_;
  std::string name_;
  std::size_t pos_ = 0;
  long line_ = 1;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open file", path, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt10(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

BayesNet parse_uai_text(const std::string& text, const std::string& name) {
  Tokenizer tk(text, name);
  std::string kind = tk.expect();
  if (kind == "MARKOV")
    tk.fail("unsupported network type MARKOV (directed models only)");
  if (kind != "BAYES") tk.fail("expected BAYES preamble, got '" + kind + "'");

  long nvars = tk.expect_int("variable count");
  if (nvars < 0) tk.fail("negative variable count");
  auto cards = std::make_shared<std::vector<int>>();
  cards->reserve(std::size_t(nvars));
  for (long i = 0; i < nvars; ++i) {
    long c = tk.expect_int("cardinality");
    if (c < 1) tk.fail("cardinality must be positive");
    cards->push_back(int(c));
  }

  long nfun = tk.expect_int("function count");
  if (nfun != nvars)
    tk.fail("directed model needs one table per variable");
  std::vector<std::vector<VarId>> scopes(static_cast<std::size_t>(nfun));
  std::vector<bool> owned(std::size_t(nvars), false);
  for (long f = 0; f < nfun; ++f) {
    long k = tk.expect_int("scope size");
    if (k < 1) tk.fail("empty scope");
    auto& sc = scopes[std::size_t(f)];
    for (long i = 0; i < k; ++i) {
      long v = tk.expect_int("scope variable");
      if (v < 0 || v >= nvars) tk.fail("scope variable out of range");
      sc.push_back(VarId(v));
    }
    VarId child = sc.back();
    if (owned[std::size_t(child)])
      tk.fail("two tables share the same child variable");
    owned[std::size_t(child)] = true;
  }

  BayesNet net;
  net.cards = cards;
  for (long v = 0; v < nvars; ++v) net.vars.push_back(VarId(v));

  for (long f = 0; f < nfun; ++f) {
    const auto& sc = scopes[std::size_t(f)];
    VarId child = sc.back();
    std::size_t n = 1;
    std::vector<int> scards;
    for (VarId v : sc) {
      scards.push_back((*cards)[std::size_t(v)]);
      n *= std::size_t((*cards)[std::size_t(v)]);
    }
    long cnt = tk.expect_int("table size");
    if (std::size_t(cnt) != n) tk.fail("table size does not match scope");
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) {
      vals[i] = tk.expect_double("table entry");
      if (vals[i] < 0) tk.fail("negative probability");
    }
    // Each parent configuration must be a distribution over the child.
    std::size_t ccard = std::size_t((*cards)[std::size_t(child)]);
    for (std::size_t r = 0; r < n; r += ccard) {
      double s = 0;
      for (std::size_t i = 0; i < ccard; ++i) s += vals[r + i];
      if (std::abs(s - 1.0) > 1e-6)
        tk.fail("conditional row does not sum to 1");
    }
    std::vector<VarId> ps(sc.begin(), sc.end() - 1);
    std::sort(ps.begin(), ps.end());
    for (VarId p : ps)
      if (p == child) tk.fail("variable listed as its own parent");
    net.parents[child] = ps;
    net.cpds.emplace(child, FactorTable::from_unsorted(sc, scards, vals));
  }
  net.check();
  return net;
}

BayesNet parse_uai(const std::string& path) {
  return parse_uai_text(slurp(path), path);
}

std::map<VarId, int> parse_evidence_text(const std::string& text,
                                         const std::string& name) {
  Tokenizer tk(text, name);
  long n = tk.expect_int("evidence count");
  if (n < 0) tk.fail("negative evidence count");
  std::map<VarId, int> out;
  for (long i = 0; i < n; ++i) {
    long v = tk.expect_int("evidence variable");
    long s = tk.expect_int("evidence state");
    if (v < 0) tk.fail("negative variable id");
    if (s < 0) tk.fail("negative state");
    if (out.count(VarId(v))) tk.fail("duplicate evidence variable");
    out[VarId(v)] = int(s);
  }
  std::string extra;
  if (tk.next(extra)) tk.fail("trailing tokens after evidence list");
  return out;
}

std::map<VarId, int> parse_evidence(const std::string& path) {
  return parse_evidence_text(slurp(path), path);
}

void write_uai(const std::string& path, const BayesNet& net) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing", path, 0);
  out << "BAYES\n" << net.vars.size() << "\n";
  for (VarId v : net.vars) out << net.card(v) << (v == net.vars.back() ? "\n" : " ");
  out << net.vars.size() << "\n";
  for (VarId v : net.vars) {
    const auto& ps = net.parents.at(v);
    out << ps.size() + 1;
    for (VarId p : ps) out << " " << p;
    out << " " << v << "\n";
  }
  for (VarId v : net.vars) {
    const auto& ps = net.parents.at(v);
    std::vector<VarId> order(ps.begin(), ps.end());
    order.push_back(v);
    const FactorTable& f = net.cpds.at(v);
    std::size_t n = 1;
    for (VarId x : order) n *= std::size_t(net.card(x));
    out << "\n" << n << "\n";
    VarId maxv = *std::max_element(order.begin(), order.end());
    std::vector<int> state(std::size_t(maxv) + 1, 0);
    std::vector<int> cur(order.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < order.size(); ++d)
        state[std::size_t(order[d])] = cur[d];
      out << fmt10(f.at_assignment(state));
      out << ((i + 1) % std::size_t(net.card(v)) == 0 ? "\n" : " ");
      for (std::size_t d = order.size(); d-- > 0;) {
        if (++cur[d] < net.card(order[d])) break;
        cur[d] = 0;
      }
    }
  }
}

void write_evidence(const std::string& path, const std::map<VarId, int>& evid) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing", path, 0);
  out << evid.size();
  for (const auto& [v, s] : evid) out << " " << v << " " << s;
  out << "\n";
}

void write_pr_result(const std::string& path, double log10_pr) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing", path, 0);
  out << "PR\n" << fmt10(log10_pr) << "\n";
}

void write_mar_result(const std::string& path,
                      const std::vector<std::vector<double>>& marginals) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot open for writing", path, 0);
  out << "MAR\n" << marginals.size();
  for (const auto& m : marginals) {
    out << " " << m.size();
    for (double p : m) out << " " << fmt10(p);
  }
  out << "\n";
}

double parse_pr_result(const std::string& path) {
  Tokenizer tk(slurp(path), path);
  std::string tag = tk.expect();
  if (tag != "PR") tk.fail("expected PR header");
  return tk.expect_double("log10 probability");
}

std::vector<std::vector<double>> parse_mar_result(const std::string& path) {
  Tokenizer tk(slurp(path), path);
  std::string tag = tk.expect();
  if (tag != "MAR") tk.fail("expected MAR header");
  long n = tk.expect_int("variable count");
  if (n < 0) tk.fail("negative variable count");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    long c = tk.expect_int("cardinality");
    if (c < 1) tk.fail("cardinality must be positive");
    out[std::size_t(i)].resize(std::size_t(c));
    for (long s = 0; s < c; ++s)
      out[std::size_t(i)][std::size_t(s)] = tk.expect_double("marginal entry");
  }
  return out;
}

}  // namespace ibia
