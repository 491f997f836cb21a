#include "eva/infoflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_set>

#include "eva/rng.hpp"

namespace eva {

namespace {

// Compensated summation; full tables can hold ~1e6 cells and the type
// invariant (total == 1 within 1e-12) must survive that.
double kahan_sum(const std::vector<double>& values) {
    double sum = 0.0, comp = 0.0;
    for (double v : values) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

std::vector<std::size_t> make_strides(const std::vector<VariableSpec>& vars) {
    std::vector<std::size_t> strides(vars.size());
    std::size_t stride = 1;
    for (std::size_t i = vars.size(); i-- > 0;) {
        strides[i] = stride;
        stride *= vars[i].size;
    }
    return strides;
}

}  // namespace

JointDistribution::JointDistribution(std::vector<VariableSpec> vars,
                                     std::vector<double> probs)
    : vars_(std::move(vars)), probs_(std::move(probs)) {
    if (vars_.empty()) throw std::invalid_argument("joint needs at least one variable");
    std::unordered_set<std::string> seen;
    std::size_t cells = 1;
    for (const auto& v : vars_) {
        if (v.size == 0) throw std::invalid_argument("variable alphabet must be nonempty");
        if (!seen.insert(v.name).second) {
            throw std::invalid_argument("duplicate variable name: " + v.name);
        }
        if (cells > kMaxCells / v.size) {
            throw std::invalid_argument("joint table exceeds the cell cap");
        }
        cells *= v.size;
    }
    if (probs_.size() != cells) throw std::invalid_argument("probability table size mismatch");
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("probabilities must be finite and nonnegative");
        }
    }
    if (std::abs(kahan_sum(probs_) - 1.0) > 1e-12) {
        throw std::invalid_argument("probabilities must sum to 1");
    }
    strides_ = make_strides(vars_);
}

std::size_t JointDistribution::variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i].name == name) return i;
    }
    throw std::invalid_argument("unknown variable: " + name);
}

std::vector<double> JointDistribution::marginal(
    const std::vector<std::size_t>& var_indices) const {
    std::size_t out_cells = 1;
    for (std::size_t vi : var_indices) {
        if (vi >= vars_.size()) throw std::invalid_argument("variable index out of range");
        out_cells *= vars_[vi].size;
    }
    std::vector<double> out(out_cells, 0.0);
    for (std::size_t cell = 0; cell < probs_.size(); ++cell) {
        std::size_t sub = 0;
        for (std::size_t vi : var_indices) {
            sub = sub * vars_[vi].size + (cell / strides_[vi]) % vars_[vi].size;
        }
        out[sub] += probs_[cell];
    }
    return out;
}

JointDistribution JointDistribution::from_json(const nlohmann::json& j) {
    std::vector<VariableSpec> vars;
    for (const auto& v : j.at("vars")) {
        vars.push_back({v.at("name").get<std::string>(), v.at("size").get<std::size_t>()});
    }
    return JointDistribution(std::move(vars), j.at("probs").get<std::vector<double>>());
}

nlohmann::json JointDistribution::to_json() const {
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : vars_) {
        vars.push_back({{"name", v.name}, {"size", v.size}});
    }
    return {{"vars", vars}, {"probs", probs_}};
}

void DeterministicMap::validate() const {
    if (in_size == 0 || out_size == 0) throw std::invalid_argument("empty map alphabet");
    if (table.size() != in_size) throw std::invalid_argument("map table must cover the alphabet");
    for (std::size_t y : table) {
        if (y >= out_size) throw std::invalid_argument("map value outside output alphabet");
    }
}

DeterministicMap DeterministicMap::identity(std::size_t n) {
    DeterministicMap f{n, n, std::vector<std::size_t>(n)};
    for (std::size_t i = 0; i < n; ++i) f.table[i] = i;
    return f;
}

DeterministicMap DeterministicMap::constant(std::size_t in_size, std::size_t out_size,
                                            std::size_t value) {
    if (value >= out_size) throw std::invalid_argument("constant outside output alphabet");
    return DeterministicMap{in_size, out_size, std::vector<std::size_t>(in_size, value)};
}

namespace {

std::vector<std::size_t> resolve(const JointDistribution& j,
                                 const std::vector<std::string>& names) {
    std::vector<std::size_t> indices;
    indices.reserve(names.size());
    for (const auto& n : names) indices.push_back(j.variable_index(n));
    return indices;
}

void require_disjoint(std::initializer_list<const std::vector<std::size_t>*> groups) {
    std::unordered_set<std::size_t> seen;
    for (const auto* g : groups) {
        for (std::size_t vi : *g) {
            if (!seen.insert(vi).second) {
                throw std::invalid_argument("variable sets must be disjoint");
            }
        }
    }
}

std::size_t table_size(const JointDistribution& j, const std::vector<std::size_t>& indices) {
    std::size_t n = 1;
    for (std::size_t vi : indices) n *= j.variables()[vi].size;
    return n;
}

// p ln(p / q), with the p == 0 limit taken as 0.
double plogpq(double p, double q) {
    if (p <= 0.0) return 0.0;
    return p * std::log(p / q);
}

}  // namespace

double mutual_information(const JointDistribution& j, const std::vector<std::string>& a,
                          const std::vector<std::string>& b) {
    const auto ia = resolve(j, a);
    const auto ib = resolve(j, b);
    if (ia.empty() || ib.empty()) throw std::invalid_argument("variable sets must be nonempty");
    require_disjoint({&ia, &ib});

    std::vector<std::size_t> iab = ia;
    iab.insert(iab.end(), ib.begin(), ib.end());
    const auto p_ab = j.marginal(iab);
    const auto p_a = j.marginal(ia);
    const auto p_b = j.marginal(ib);

    const std::size_t nb = table_size(j, ib);
    double mi = 0.0;
    for (std::size_t ai = 0; ai < p_a.size(); ++ai) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
            const double pab = p_ab[ai * nb + bi];
            if (pab > 0.0) mi += plogpq(pab, p_a[ai] * p_b[bi]);
        }
    }
    return mi;
}

double conditional_mutual_information(const JointDistribution& j,
                                      const std::vector<std::string>& a,
                                      const std::vector<std::string>& b,
                                      const std::vector<std::string>& c) {
    const auto ia = resolve(j, a);
    const auto ib = resolve(j, b);
    const auto ic = resolve(j, c);
    if (ia.empty() || ib.empty() || ic.empty()) {
        throw std::invalid_argument("variable sets must be nonempty");
    }
    require_disjoint({&ia, &ib, &ic});

    auto concat = [](std::vector<std::size_t> x, const std::vector<std::size_t>& y) {
        x.insert(x.end(), y.begin(), y.end());
        return x;
    };
    const auto p_abc = j.marginal(concat(concat(ia, ib), ic));
    const auto p_ac = j.marginal(concat(ia, ic));
    const auto p_bc = j.marginal(concat(ib, ic));
    const auto p_c = j.marginal(ic);

    const std::size_t na = table_size(j, ia);
    const std::size_t nb = table_size(j, ib);
    const std::size_t nc = table_size(j, ic);

    // I(A;B|C) = sum p(a,b,c) ln[ p(a,b,c) p(c) / (p(a,c) p(b,c)) ]
    double cmi = 0.0;
    for (std::size_t ai = 0; ai < na; ++ai) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
            for (std::size_t ci = 0; ci < nc; ++ci) {
                const double pabc = p_abc[(ai * nb + bi) * nc + ci];
                if (pabc <= 0.0) continue;
                cmi += pabc * std::log(pabc * p_c[ci] /
                                       (p_ac[ai * nc + ci] * p_bc[bi * nc + ci]));
            }
        }
    }
    return cmi;
}

namespace {

JointDistribution append_variable(const JointDistribution& j,
                                  const std::function<std::size_t(std::size_t)>& value_of_cell,
                                  std::size_t new_size, const std::string& new_name) {
    std::vector<VariableSpec> vars = j.variables();
    for (const auto& v : vars) {
        if (v.name == new_name) throw std::invalid_argument("variable already exists: " + new_name);
    }
    vars.push_back({new_name, new_size});

    const auto& probs = j.probabilities();
    std::vector<double> out(probs.size() * new_size, 0.0);
    for (std::size_t cell = 0; cell < probs.size(); ++cell) {
        out[cell * new_size + value_of_cell(cell)] = probs[cell];
    }
    return JointDistribution(std::move(vars), std::move(out));
}

}  // namespace

JointDistribution push_forward(const JointDistribution& j, const std::string& var,
                               const DeterministicMap& f, const std::string& new_var) {
    f.validate();
    const std::size_t vi = j.variable_index(var);
    if (j.variables()[vi].size != f.in_size) {
        throw std::invalid_argument("map input alphabet does not match " + var);
    }
    const std::size_t stride = j.strides_[vi];
    const std::size_t size = j.variables()[vi].size;
    return append_variable(
        j, [&](std::size_t cell) { return f.table[(cell / stride) % size]; }, f.out_size,
        new_var);
}

JointDistribution push_forward_pair(const JointDistribution& j, const std::string& var_a,
                                    const std::string& var_b, const DeterministicMap& f,
                                    const std::string& new_var) {
    f.validate();
    const std::size_t va = j.variable_index(var_a);
    const std::size_t vb = j.variable_index(var_b);
    if (va == vb) throw std::invalid_argument("pair map needs two distinct variables");
    const std::size_t size_a = j.variables()[va].size;
    const std::size_t size_b = j.variables()[vb].size;
    if (f.in_size != size_a * size_b) {
        throw std::invalid_argument("map input alphabet does not match the pair");
    }
    const std::size_t stride_a = j.strides_[va];
    const std::size_t stride_b = j.strides_[vb];
    return append_variable(
        j,
        [&](std::size_t cell) {
            const std::size_t a = (cell / stride_a) % size_a;
            const std::size_t b = (cell / stride_b) % size_b;
            return f.table[a * size_b + b];
        },
        f.out_size, new_var);
}

DpiChainResult verify_dpi_chain(const JointDistribution& joint_zx,
                                const DeterministicMap& encode,
                                const DeterministicMap& process,
                                const DeterministicMap& decode, double tolerance) {
    if (joint_zx.variables().size() != 2) {
        throw std::invalid_argument("chain verification starts from a two-variable joint");
    }
    const std::string z = joint_zx.variables()[0].name;
    const std::string x = joint_zx.variables()[1].name;

    JointDistribution with_h = push_forward(joint_zx, x, encode, "__h");
    JointDistribution with_o = push_forward(with_h, "__h", process, "__o");
    JointDistribution with_y = push_forward(with_o, "__o", decode, "__y");

    DpiChainResult r;
    r.i_zx = mutual_information(with_y, {z}, {x});
    r.i_zh = mutual_information(with_y, {z}, {"__h"});
    r.i_zo = mutual_information(with_y, {z}, {"__o"});
    r.i_zy = mutual_information(with_y, {z}, {"__y"});
    r.holds = r.i_zy <= r.i_zo + tolerance && r.i_zo <= r.i_zh + tolerance &&
              r.i_zh <= r.i_zx + tolerance;
    return r;
}

ChainRuleResult verify_chain_rule(const JointDistribution& j, const std::string& z,
                                  const std::string& o1, const std::string& o2,
                                  double tolerance) {
    ChainRuleResult r;
    r.joint_mi = mutual_information(j, {z}, {o1, o2});
    r.first_mi = mutual_information(j, {z}, {o1});
    r.second_given_first = conditional_mutual_information(j, {z}, {o2}, {o1});
    r.residual = std::abs(r.joint_mi - r.first_mi - r.second_given_first);
    r.monotone = r.joint_mi >= r.first_mi - tolerance;
    return r;
}

StochasticDecodingResult verify_stochastic_decoding(const JointDistribution& joint_zou,
                                                    const std::string& z, const std::string& o,
                                                    const std::string& u,
                                                    const DeterministicMap& g,
                                                    double tolerance) {
    const auto iz = joint_zou.variable_index(z);
    const auto io = joint_zou.variable_index(o);
    const auto iu = joint_zou.variable_index(u);

    // p(z,o,u) must factor as p(z,o) q(u).
    const auto p_zou = joint_zou.marginal({iz, io, iu});
    const auto p_zo = joint_zou.marginal({iz, io});
    const auto p_u = joint_zou.marginal({iu});
    const std::size_t nu = p_u.size();
    for (std::size_t zo = 0; zo < p_zo.size(); ++zo) {
        for (std::size_t ui = 0; ui < nu; ++ui) {
            if (std::abs(p_zou[zo * nu + ui] - p_zo[zo] * p_u[ui]) > 1e-12) {
                throw std::invalid_argument("randomness variable is not independent");
            }
        }
    }

    JointDistribution with_y = push_forward_pair(joint_zou, o, u, g, "__y");
    StochasticDecodingResult r;
    r.i_zo = mutual_information(with_y, {z}, {o});
    r.i_zy = mutual_information(with_y, {z}, {"__y"});
    r.holds = r.i_zy <= r.i_zo + tolerance;
    return r;
}

JointDistribution product_with_independent(const JointDistribution& j,
                                           const VariableSpec& var,
                                           const std::vector<double>& probs) {
    if (probs.size() != var.size) throw std::invalid_argument("independent variable size mismatch");
    std::vector<VariableSpec> vars = j.variables();
    vars.push_back(var);
    std::vector<double> out;
    out.reserve(j.cell_count() * var.size);
    for (double p : j.probabilities()) {
        for (double q : probs) out.push_back(p * q);
    }
    return JointDistribution(std::move(vars), std::move(out));
}

JointDistribution random_joint(Rng& rng, std::vector<VariableSpec> vars) {
    std::size_t cells = 1;
    for (const auto& v : vars) cells *= v.size;
    std::vector<double> probs(cells);
    double sum = 0.0;
    for (auto& p : probs) {
        p = rng.uniform() + 1e-12;
        sum += p;
    }
    for (auto& p : probs) p /= sum;
    // Fold the normalization roundoff into the largest cell so the table
    // sums to 1 within the type's 1e-12 tolerance at any size.
    auto largest = std::max_element(probs.begin(), probs.end());
    *largest += 1.0 - kahan_sum(probs);
    return JointDistribution(std::move(vars), std::move(probs));
}

DeterministicMap random_map(Rng& rng, std::size_t in_size, std::size_t out_size) {
    DeterministicMap f{in_size, out_size, std::vector<std::size_t>(in_size)};
    for (auto& y : f.table) {
        y = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform() * out_size),
                                  out_size - 1);
    }
    return f;
}

}  // namespace eva
