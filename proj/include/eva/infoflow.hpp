#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace eva {

class Rng;

struct VariableSpec {
    std::string name;
    std::size_t size = 0;

    bool operator==(const VariableSpec& other) const = default;
};

// Exact joint distribution over named finite variables. The table is flat
// row-major with the LAST variable as the fastest axis. Capped at 1e6
// cells; everything downstream is exact full-table arithmetic.
class JointDistribution {
public:
    JointDistribution(std::vector<VariableSpec> vars, std::vector<double> probs);

    static constexpr std::size_t kMaxCells = 1000000;

    const std::vector<VariableSpec>& variables() const { return vars_; }
    const std::vector<double>& probabilities() const { return probs_; }
    std::size_t cell_count() const { return probs_.size(); }
    std::size_t variable_index(const std::string& name) const;

    // Marginal table over a subset of variables, in the order given.
    std::vector<double> marginal(const std::vector<std::size_t>& var_indices) const;

    static JointDistribution from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::vector<VariableSpec> vars_;
    std::vector<double> probs_;
    std::vector<std::size_t> strides_;

    friend JointDistribution push_forward(const JointDistribution&, const std::string&,
                                          const struct DeterministicMap&, const std::string&);
    friend JointDistribution push_forward_pair(const JointDistribution&, const std::string&,
                                               const std::string&,
                                               const struct DeterministicMap&,
                                               const std::string&);
};

// Total function between finite alphabets, table[i] = f(i).
struct DeterministicMap {
    std::size_t in_size = 0;
    std::size_t out_size = 0;
    std::vector<std::size_t> table;

    void validate() const;
    static DeterministicMap identity(std::size_t n);
    static DeterministicMap constant(std::size_t in_size, std::size_t out_size,
                                     std::size_t value);
};

// I(A;B) in nats; zero-probability terms contribute nothing.
double mutual_information(const JointDistribution& j, const std::vector<std::string>& a,
                          const std::vector<std::string>& b);

// I(A;B|C) in nats.
double conditional_mutual_information(const JointDistribution& j,
                                      const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      const std::vector<std::string>& c);

// Appends new_var = f(var) to the joint. Existing marginals are unchanged.
JointDistribution push_forward(const JointDistribution& j, const std::string& var,
                               const DeterministicMap& f, const std::string& new_var);

// Same, with f consuming an ordered pair: input index = a * |B| + b.
JointDistribution push_forward_pair(const JointDistribution& j, const std::string& var_a,
                                    const std::string& var_b, const DeterministicMap& f,
                                    const std::string& new_var);

struct DpiChainResult {
    double i_zx = 0.0;
    double i_zh = 0.0;
    double i_zo = 0.0;
    double i_zy = 0.0;
    bool holds = false;
};

// Pushes X through encode, process, decode and checks that information
// about Z can only shrink along the chain (within tolerance).
DpiChainResult verify_dpi_chain(const JointDistribution& joint_zx,
                                const DeterministicMap& encode,
                                const DeterministicMap& process,
                                const DeterministicMap& decode, double tolerance = 1e-9);

struct ChainRuleResult {
    double joint_mi = 0.0;          // I(Z; O1,O2)
    double first_mi = 0.0;          // I(Z; O1)
    double second_given_first = 0.0;  // I(Z; O2 | O1)
    double residual = 0.0;
    bool monotone = false;  // I(Z;O1,O2) >= I(Z;O1) - tolerance
};

// Checks I(Z;O1,O2) == I(Z;O1) + I(Z;O2|O1) on a three-variable joint.
ChainRuleResult verify_chain_rule(const JointDistribution& j, const std::string& z,
                                  const std::string& o1, const std::string& o2,
                                  double tolerance = 1e-9);

// For a joint over (Z, O, U) with U independent of (Z, O), forms
// Y = g(O, U) and checks I(Z;Y) <= I(Z;O) + tolerance. Rejects joints
// where U is not independent.
struct StochasticDecodingResult {
    double i_zo = 0.0;
    double i_zy = 0.0;
    bool holds = false;
};

StochasticDecodingResult verify_stochastic_decoding(const JointDistribution& joint_zou,
                                                    const std::string& z,
                                                    const std::string& o,
                                                    const std::string& u,
                                                    const DeterministicMap& g,
                                                    double tolerance = 1e-9);

// Extends a joint with an independent variable, p(.., u) = p(..) q(u).
JointDistribution product_with_independent(const JointDistribution& j,
                                           const VariableSpec& var,
                                           const std::vector<double>& probs);

// Seeded random instances for property checks and the diag command.
JointDistribution random_joint(Rng& rng, std::vector<VariableSpec> vars);
DeterministicMap random_map(Rng& rng, std::size_t in_size, std::size_t out_size);

}  // namespace eva
