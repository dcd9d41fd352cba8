#ifndef IBIA_UAI_IO_HPP
#define IBIA_UAI_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "ibia/bn_model.hpp"

namespace ibia {

// UAI-format network file, BAYES preamble only.  Whitespace and newlines
// are ignored; errors carry file/line locations.  Each variable must have
// exactly one table with itself as the last scope variable, and each row
// (fixed parent state) must sum to 1 within 1e-6.
BayesNet parse_uai(const std::string& path);
BayesNet parse_uai_text(const std::string& text, const std::string& name);

// Evidence file: count followed by (variable, state) pairs.
std::map<VarId, int> parse_evidence(const std::string& path);
std::map<VarId, int> parse_evidence_text(const std::string& text,
                                         const std::string& name);

void write_uai(const std::string& path, const BayesNet& net);
void write_evidence(const std::string& path, const std::map<VarId, int>& evid);

// Result files in the UAI competition layout; values use 10 significant
// digits.  PR carries log10 of the evidence probability.
void write_pr_result(const std::string& path, double log10_pr);
void write_mar_result(const std::string& path,
                      const std::vector<std::vector<double>>& marginals);
double parse_pr_result(const std::string& path);
std::vector<std::vector<double>> parse_mar_result(const std::string& path);

}  // namespace ibia

#endif
