#pragma once

// Probit Bayesian additive regression trees.
//
//   Z_i = offset + sum_t g(x_i; T_t, M_t) + eps_i,  eps_i ~ N(0, 1),  Y_i = 1{Z_i > 0}
//
// Trees get the depth prior P(split at depth d) = kappa (1 + d)^-eta with
// uniform split variables and cutpoints; leaf means are N(0, leaf_sd^2).
// Each MCMC iteration redraws Z from its truncated normal full conditional
// and then backfits the trees one at a time with grow / prune / change /
// swap Metropolis-Hastings proposals, integrating the leaf means out of the
// acceptance ratio and drawing them conjugately afterwards.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "otr/error.hpp"
#include "otr/random.hpp"
#include "otr/samplers/dataset.hpp"
#include "otr/stats.hpp"

namespace otr {

struct BartConfig {
    int num_trees = 50;
    double kappa = 0.95;
    double eta = 2.0;
    double k = 2.0;
    // Leaf-mean prior standard deviation; defaults to 3 / (k sqrt(T)).
    std::optional<double> leaf_sd;
    int num_cutpoints = 100;
    int min_leaf_size = 5;
    // Proposal mix; must sum to one.
    double p_grow = 0.25;
    double p_prune = 0.25;
    double p_change = 0.40;
    double p_swap = 0.10;
    McmcConfig mcmc;

    double resolved_leaf_sd() const { return leaf_sd ? *leaf_sd : 3.0 / (k * std::sqrt(static_cast<double>(num_trees))); }

    void validate() const {
        mcmc.validate();
        if (num_trees < 1) throw Error(ErrorKind::invalid_argument, "BART needs at least one tree");
        if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorKind::invalid_argument, "kappa must lie in (0,1)");
        if (!(eta >= 0.0)) throw Error(ErrorKind::invalid_argument, "eta must be >= 0");
        if (!(k > 0.0)) throw Error(ErrorKind::invalid_argument, "k must be > 0");
        if (!(resolved_leaf_sd() > 0.0)) throw Error(ErrorKind::invalid_argument, "leaf_sd must be > 0");
        if (num_cutpoints < 1 || min_leaf_size < 1) throw Error(ErrorKind::invalid_argument, "bad cutpoint grid");
        const double total = p_grow + p_prune + p_change + p_swap;
        if (std::abs(total - 1.0) > 1e-9 || p_grow < 0 || p_prune < 0 || p_change < 0 || p_swap < 0) {
            throw Error(ErrorKind::invalid_argument, "move probabilities must be non-negative and sum to one");
        }
    }
};

// Equally spaced interior cutpoints per covariate over the training range,
// plus each point's position in that grid.
class CutpointGrid {
public:
    CutpointGrid() = default;

    CutpointGrid(const Eigen::MatrixXd& x, int per_variable) {
        cuts_.resize(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index v = 0; v < x.cols(); ++v) {
            const double lo = x.col(v).minCoeff();
            const double hi = x.col(v).maxCoeff();
            auto& cuts = cuts_[static_cast<std::size_t>(v)];
            if (hi > lo) {
                cuts.resize(static_cast<std::size_t>(per_variable));
                for (int c = 0; c < per_variable; ++c) {
                    cuts[static_cast<std::size_t>(c)] = lo + (c + 1) * (hi - lo) / (per_variable + 1);
                }
            }
        }
    }

    int num_variables() const noexcept { return static_cast<int>(cuts_.size()); }
    int num_cuts(int var) const noexcept { return static_cast<int>(cuts_[static_cast<std::size_t>(var)].size()); }
    double value(int var, int cut) const { return cuts_[static_cast<std::size_t>(var)][static_cast<std::size_t>(cut)]; }

    // ranks[i * p + v] = number of cutpoints of v that are <= x(i, v); a
    // point goes left at rule (v, c) iff c >= that rank.
    std::vector<int> ranks(const Eigen::MatrixXd& x) const {
        const auto p = static_cast<Eigen::Index>(cuts_.size());
        if (x.cols() != p) throw Error(ErrorKind::length_mismatch, "covariate count differs from training data");
        std::vector<int> out(static_cast<std::size_t>(x.rows() * p));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index v = 0; v < p; ++v) {
                const auto& cuts = cuts_[static_cast<std::size_t>(v)];
                out[static_cast<std::size_t>(i * p + v)] =
                    static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x(i, v)) - cuts.begin());
            }
        }
        return out;
    }

private:
    std::vector<std::vector<double>> cuts_;
};

class RegressionTree {
public:
    struct Node {
        int var = -1;
        int cut = -1;
        double mu = 0.0;
        int parent = -1;
        int left = -1;
        int right = -1;
        int depth = 0;
        bool alive = true;
        bool leaf() const noexcept { return left < 0; }
    };

    RegressionTree() { nodes_.push_back(Node{}); }

    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    int capacity() const noexcept { return static_cast<int>(nodes_.size()); }

    template <class Ranks>
    int find_leaf(const Ranks& rank_row) const {
        int id = 0;
        while (!nodes_[static_cast<std::size_t>(id)].leaf()) {
            const Node& nd = nodes_[static_cast<std::size_t>(id)];
            id = nd.cut >= rank_row[static_cast<std::size_t>(nd.var)] ? nd.left : nd.right;
        }
        return id;
    }

    std::vector<int> leaves() const {
        std::vector<int> out;
        for (int i = 0; i < capacity(); ++i) {
            if (nodes_[static_cast<std::size_t>(i)].alive && nodes_[static_cast<std::size_t>(i)].leaf()) out.push_back(i);
        }
        return out;
    }

    std::vector<int> internal_nodes() const {
        std::vector<int> out;
        for (int i = 0; i < capacity(); ++i) {
            if (nodes_[static_cast<std::size_t>(i)].alive && !nodes_[static_cast<std::size_t>(i)].leaf()) out.push_back(i);
        }
        return out;
    }

    // Internal nodes whose children are both leaves.
    std::vector<int> nog_nodes() const {
        std::vector<int> out;
        for (int i = 0; i < capacity(); ++i) {
            const Node& nd = nodes_[static_cast<std::size_t>(i)];
            if (nd.alive && !nd.leaf() && node(nd.left).leaf() && node(nd.right).leaf()) out.push_back(i);
        }
        return out;
    }

    bool is_nog(int id) const {
        const Node& nd = node(id);
        return !nd.leaf() && node(nd.left).leaf() && node(nd.right).leaf();
    }

    void grow(int leaf, int var, int cut) {
        const int l = allocate();
        const int r = allocate();
        Node& nd = node(leaf);
        nd.var = var;
        nd.cut = cut;
        nd.left = l;
        nd.right = r;
        for (int child : {l, r}) {
            Node& c = node(child);
            c = Node{};
            c.parent = leaf;
            c.depth = node(leaf).depth + 1;
        }
    }

    void prune(int id) {
        Node& nd = node(id);
        node(nd.left).alive = false;
        node(nd.right).alive = false;
        free_.push_back(nd.left);
        free_.push_back(nd.right);
        nd.left = nd.right = -1;
        nd.var = nd.cut = -1;
    }

    // Inclusive range of cut indices for `var` that keeps the node's region
    // non-empty given its ancestors' rules; empty when lo > hi.
    std::array<int, 2> cut_range(int id, int var, int num_cuts) const {
        int lo = 0;
        int hi = num_cuts - 1;
        int child = id;
        int parent = node(id).parent;
        while (parent >= 0) {
            const Node& p = node(parent);
            if (p.var == var) {
                if (p.left == child) {
                    hi = std::min(hi, p.cut - 1);
                } else {
                    lo = std::max(lo, p.cut + 1);
                }
            }
            child = parent;
            parent = p.parent;
        }
        return {lo, hi};
    }

    int num_leaves() const {
        int count = 0;
        for (const auto& nd : nodes_) count += (nd.alive && nd.leaf()) ? 1 : 0;
        return count;
    }

private:
    int allocate() {
        if (!free_.empty()) {
            const int id = free_.back();
            free_.pop_back();
            return id;
        }
        nodes_.push_back(Node{});
        return capacity() - 1;
    }

    std::vector<Node> nodes_;
    std::vector<int> free_;
};

struct BartMoveStats {
    std::array<long, 4> proposed{};
    std::array<long, 4> accepted{};
};

class ProbitBart {
public:
    enum Move { grow = 0, prune = 1, change = 2, swap = 3 };

    ProbitBart(std::span<const int> y, const Eigen::MatrixXd& x, const BartConfig& cfg, rng::Engine eng)
        : cfg_(cfg), eng_(std::move(eng)) {
        cfg_.validate();
        const auto n = static_cast<Eigen::Index>(y.size());
        if (x.cols() < 1) throw Error(ErrorKind::empty_covariates, "BART needs at least one covariate");
        if (x.rows() != n) throw Error(ErrorKind::length_mismatch, "outcome and covariate row counts differ");
        if (n < 2) throw Error(ErrorKind::invalid_argument, "BART needs at least two observations");
        long ones = 0;
        for (int v : y) {
            if (v != 0 && v != 1) throw Error(ErrorKind::non_binary_outcome, "outcome must be 0/1");
            ones += v;
        }
        if (ones == 0 || ones == n) throw Error(ErrorKind::single_class_outcome, "outcome has a single class");

        y_.assign(y.begin(), y.end());
        p_ = static_cast<int>(x.cols());
        grid_ = CutpointGrid(x, cfg_.num_cutpoints);
        ranks_ = grid_.ranks(x);
        offset_ = stats::normal_quantile(static_cast<double>(ones) / static_cast<double>(n));
        leaf_var_ = cfg_.resolved_leaf_sd() * cfg_.resolved_leaf_sd();

        trees_.resize(static_cast<std::size_t>(cfg_.num_trees));
        leaf_of_.assign(static_cast<std::size_t>(cfg_.num_trees), std::vector<int>(y_.size(), 0));
        fit_.assign(y_.size(), 0.0);
        latent_.assign(y_.size(), 0.0);
        residual_.assign(y_.size(), 0.0);
        before_.assign(y_.size(), 0.0);
    }

    const BartConfig& config() const noexcept { return cfg_; }
    double offset() const noexcept { return offset_; }
    std::span<const double> latent() const noexcept { return latent_; }
    std::span<const double> fit() const noexcept { return fit_; }
    const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    const CutpointGrid& grid() const noexcept { return grid_; }
    const BartMoveStats& move_stats() const noexcept { return stats_; }

    void update_latent() {
        for (std::size_t i = 0; i < y_.size(); ++i) {
            latent_[i] = rng::truncated_normal_sign(eng_, offset_ + fit_[i], y_[i] == 1);
        }
    }

    void update_trees() {
        for (std::size_t t = 0; t < trees_.size(); ++t) update_tree(t);
    }

    void step() {
        update_latent();
        update_trees();
    }

    // Sum-of-trees value (without offset) at points given by `ranks`.
    void predict_latent(std::span<const int> ranks, std::span<double> out) const {
        const std::size_t m = out.size();
        for (std::size_t i = 0; i < m; ++i) {
            const int* row = ranks.data() + i * static_cast<std::size_t>(p_);
            double s = 0.0;
            for (const auto& tree : trees_) s += tree.node(tree.find_leaf(row)).mu;
            out[i] = s;
        }
    }

private:
    struct Suff {
        double n = 0.0;
        double sum = 0.0;
    };

    double leaf_loglik(const Suff& s) const noexcept {
        const double denom = 1.0 + s.n * leaf_var_;
        return -0.5 * std::log(denom) + 0.5 * leaf_var_ * s.sum * s.sum / denom;
    }

    double split_prob(int depth) const noexcept { return cfg_.kappa * std::pow(1.0 + depth, -cfg_.eta); }

    const int* rank_row(std::size_t i) const noexcept { return ranks_.data() + i * static_cast<std::size_t>(p_); }

    // Variables with a non-empty cut range at `id`.
    std::vector<int> available_vars(const RegressionTree& tree, int id) const {
        std::vector<int> vars;
        for (int v = 0; v < p_; ++v) {
            const auto [lo, hi] = tree.cut_range(id, v, grid_.num_cuts(v));
            if (lo <= hi) vars.push_back(v);
        }
        return vars;
    }

    int uniform_index(int size) {
        return static_cast<int>(std::min<double>(size - 1, std::floor(rng::uniform01(eng_) * size)));
    }

    // Draw a rule for node `id`; returns false when no variable is splittable.
    bool draw_rule(const RegressionTree& tree, int id, int& var, int& cut) {
        const auto vars = available_vars(tree, id);
        if (vars.empty()) return false;
        var = vars[static_cast<std::size_t>(uniform_index(static_cast<int>(vars.size())))];
        const auto [lo, hi] = tree.cut_range(id, var, grid_.num_cuts(var));
        cut = lo + uniform_index(hi - lo + 1);
        return true;
    }

    // log of the split-rule prior 1 / (#vars * #cuts) at an internal node,
    // or nullopt when the node's rule is outside its admissible range.
    std::optional<double> log_rule_prior(const RegressionTree& tree, int id) const {
        const auto& nd = tree.node(id);
        const auto [lo, hi] = tree.cut_range(id, nd.var, grid_.num_cuts(nd.var));
        if (nd.cut < lo || nd.cut > hi) return std::nullopt;
        const auto vars = available_vars(tree, id);
        return -std::log(static_cast<double>(vars.size())) - std::log(static_cast<double>(hi - lo + 1));
    }

    bool accept(double log_ratio) { return std::log(rng::uniform01(eng_)) < log_ratio; }

    void update_tree(std::size_t t) {
        RegressionTree& tree = trees_[t];
        std::vector<int>& leaf_of = leaf_of_[t];
        const std::size_t n = y_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double own = tree.node(leaf_of[i]).mu;
            residual_[i] = latent_[i] - offset_ - fit_[i] + own;
            before_[i] = own;
        }

        const double u = rng::uniform01(eng_);
        Move move = swap;
        if (u < cfg_.p_grow) {
            move = grow;
        } else if (u < cfg_.p_grow + cfg_.p_prune) {
            move = prune;
        } else if (u < cfg_.p_grow + cfg_.p_prune + cfg_.p_change) {
            move = change;
        }
        ++stats_.proposed[move];
        bool ok = false;
        switch (move) {
        case grow: ok = propose_grow(tree, leaf_of); break;
        case prune: ok = propose_prune(tree, leaf_of); break;
        case change: ok = propose_change(tree, leaf_of); break;
        case swap: ok = propose_swap(tree, leaf_of); break;
        }
        if (ok) ++stats_.accepted[move];

        draw_leaf_means(tree, leaf_of);
        for (std::size_t i = 0; i < n; ++i) {
            fit_[i] += tree.node(leaf_of[i]).mu - before_[i];
        }
    }

    std::vector<Suff> leaf_stats(const RegressionTree& tree, const std::vector<int>& leaf_of) const {
        std::vector<Suff> s(static_cast<std::size_t>(tree.capacity()));
        for (std::size_t i = 0; i < leaf_of.size(); ++i) {
            auto& cell = s[static_cast<std::size_t>(leaf_of[i])];
            cell.n += 1.0;
            cell.sum += residual_[i];
        }
        return s;
    }

    void draw_leaf_means(RegressionTree& tree, const std::vector<int>& leaf_of) {
        const auto s = leaf_stats(tree, leaf_of);
        for (int id : tree.leaves()) {
            const auto& cell = s[static_cast<std::size_t>(id)];
            const double precision = cell.n + 1.0 / leaf_var_;
            tree.node(id).mu = cell.sum / precision + rng::normal(eng_) / std::sqrt(precision);
        }
    }

    int count_growable(const RegressionTree& tree) const {
        int count = 0;
        for (int id : tree.leaves()) count += available_vars(tree, id).empty() ? 0 : 1;
        return count;
    }

    // Split the observations of `id` by rule (var, cut).
    std::array<Suff, 2> split_stats(const std::vector<int>& members, int var, int cut) const {
        std::array<Suff, 2> s{};
        for (int i : members) {
            const bool left = cut >= rank_row(static_cast<std::size_t>(i))[var];
            auto& cell = s[left ? 0 : 1];
            cell.n += 1.0;
            cell.sum += residual_[static_cast<std::size_t>(i)];
        }
        return s;
    }

    std::vector<int> members_of(const std::vector<int>& leaf_of, int a, int b = -2) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < leaf_of.size(); ++i) {
            if (leaf_of[i] == a || leaf_of[i] == b) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    bool propose_grow(RegressionTree& tree, std::vector<int>& leaf_of) {
        std::vector<int> growable;
        for (int id : tree.leaves()) {
            if (!available_vars(tree, id).empty()) growable.push_back(id);
        }
        if (growable.empty()) return false;
        const int leaf = growable[static_cast<std::size_t>(uniform_index(static_cast<int>(growable.size())))];
        int var = -1;
        int cut = -1;
        draw_rule(tree, leaf, var, cut);

        const auto members = members_of(leaf_of, leaf);
        const auto split = split_stats(members, var, cut);
        if (split[0].n < cfg_.min_leaf_size || split[1].n < cfg_.min_leaf_size) return false;

        Suff parent{split[0].n + split[1].n, split[0].sum + split[1].sum};
        const int depth = tree.node(leaf).depth;
        const int up = tree.node(leaf).parent;
        const int nog_after = static_cast<int>(tree.nog_nodes().size()) - ((up >= 0 && tree.is_nog(up)) ? 1 : 0) + 1;

        const double ps = split_prob(depth);
        const double ps_child = split_prob(depth + 1);
        double log_ratio = std::log(cfg_.p_prune / cfg_.p_grow);
        log_ratio += std::log(static_cast<double>(growable.size())) - std::log(static_cast<double>(nog_after));
        log_ratio += std::log(ps) + 2.0 * std::log1p(-ps_child) - std::log1p(-ps);
        log_ratio += leaf_loglik(split[0]) + leaf_loglik(split[1]) - leaf_loglik(parent);
        if (!accept(log_ratio)) return false;

        tree.grow(leaf, var, cut);
        const int l = tree.node(leaf).left;
        const int r = tree.node(leaf).right;
        for (int i : members) {
            leaf_of[static_cast<std::size_t>(i)] = cut >= rank_row(static_cast<std::size_t>(i))[var] ? l : r;
        }
        return true;
    }

    bool propose_prune(RegressionTree& tree, std::vector<int>& leaf_of) {
        const auto nogs = tree.nog_nodes();
        if (nogs.empty()) return false;
        const int id = nogs[static_cast<std::size_t>(uniform_index(static_cast<int>(nogs.size())))];
        const auto& nd = tree.node(id);
        const auto members = members_of(leaf_of, nd.left, nd.right);
        const auto split = split_stats(members, nd.var, nd.cut);
        Suff parent{split[0].n + split[1].n, split[0].sum + split[1].sum};

        // Growable leaves after pruning: the merged node is growable (it
        // carried a valid rule); its two children no longer count.
        int growable_after = count_growable(tree) + 1;
        for (int child : {nd.left, nd.right}) {
            if (!available_vars(tree, child).empty()) --growable_after;
        }

        const double ps = split_prob(nd.depth);
        const double ps_child = split_prob(nd.depth + 1);
        double log_ratio = std::log(cfg_.p_grow / cfg_.p_prune);
        log_ratio += std::log(static_cast<double>(nogs.size())) - std::log(static_cast<double>(growable_after));
        log_ratio -= std::log(ps) + 2.0 * std::log1p(-ps_child) - std::log1p(-ps);
        log_ratio -= leaf_loglik(split[0]) + leaf_loglik(split[1]) - leaf_loglik(parent);
        if (!accept(log_ratio)) return false;

        const int l = nd.left;
        const int r = nd.right;
        tree.prune(id);
        for (auto& leaf : leaf_of) {
            if (leaf == l || leaf == r) leaf = id;
        }
        return true;
    }

    bool propose_change(RegressionTree& tree, std::vector<int>& leaf_of) {
        const auto nogs = tree.nog_nodes();
        if (nogs.empty()) return false;
        const int id = nogs[static_cast<std::size_t>(uniform_index(static_cast<int>(nogs.size())))];
        const int l = tree.node(id).left;
        const int r = tree.node(id).right;
        int var = -1;
        int cut = -1;
        if (!draw_rule(tree, id, var, cut)) return false;

        const auto members = members_of(leaf_of, l, r);
        const auto old_split = split_stats(members, tree.node(id).var, tree.node(id).cut);
        const auto new_split = split_stats(members, var, cut);
        if (new_split[0].n < cfg_.min_leaf_size || new_split[1].n < cfg_.min_leaf_size) return false;

        const double log_ratio = leaf_loglik(new_split[0]) + leaf_loglik(new_split[1]) - leaf_loglik(old_split[0]) -
                                 leaf_loglik(old_split[1]);
        if (!accept(log_ratio)) return false;

        tree.node(id).var = var;
        tree.node(id).cut = cut;
        for (int i : members) {
            leaf_of[static_cast<std::size_t>(i)] = cut >= rank_row(static_cast<std::size_t>(i))[var] ? l : r;
        }
        return true;
    }

    void subtree_internal(const RegressionTree& tree, int id, std::vector<int>& out) const {
        if (tree.node(id).leaf()) return;
        out.push_back(id);
        subtree_internal(tree, tree.node(id).left, out);
        subtree_internal(tree, tree.node(id).right, out);
    }

    bool propose_swap(RegressionTree& tree, std::vector<int>& leaf_of) {
        std::vector<int> children;
        for (int id : tree.internal_nodes()) {
            if (tree.node(id).parent >= 0) children.push_back(id);
        }
        if (children.empty()) return false;
        const int child = children[static_cast<std::size_t>(uniform_index(static_cast<int>(children.size())))];
        const int parent = tree.node(child).parent;
        const int sibling = tree.node(parent).left == child ? tree.node(parent).right : tree.node(parent).left;
        const bool both = !tree.node(sibling).leaf() && tree.node(sibling).var == tree.node(child).var &&
                          tree.node(sibling).cut == tree.node(child).cut;

        std::vector<int> internal;
        subtree_internal(tree, parent, internal);
        double old_prior = 0.0;
        for (int id : internal) old_prior += *log_rule_prior(tree, id);

        const auto old_stats = leaf_stats(tree, leaf_of);
        const int pv = tree.node(parent).var;
        const int pc = tree.node(parent).cut;
        auto apply = [&](int from_var, int from_cut, int to_var, int to_cut) {
            tree.node(parent).var = from_var;
            tree.node(parent).cut = from_cut;
            tree.node(child).var = to_var;
            tree.node(child).cut = to_cut;
            if (both) {
                tree.node(sibling).var = to_var;
                tree.node(sibling).cut = to_cut;
            }
        };
        const int cv = tree.node(child).var;
        const int cc = tree.node(child).cut;
        apply(cv, cc, pv, pc);

        auto revert = [&]() { apply(pv, pc, cv, cc); };
        double new_prior = 0.0;
        for (int id : internal) {
            const auto lp = log_rule_prior(tree, id);
            if (!lp) {
                revert();
                return false;
            }
            new_prior += *lp;
        }

        std::vector<int> new_leaf_of(leaf_of.size());
        for (std::size_t i = 0; i < leaf_of.size(); ++i) new_leaf_of[i] = tree.find_leaf(rank_row(i));
        const auto new_stats = leaf_stats(tree, new_leaf_of);

        std::vector<int> leaves_below;
        for (int id : internal) {
            for (int c : {tree.node(id).left, tree.node(id).right}) {
                if (tree.node(c).leaf()) leaves_below.push_back(c);
            }
        }
        double log_ratio = new_prior - old_prior;
        for (int id : leaves_below) {
            const auto& ns = new_stats[static_cast<std::size_t>(id)];
            if (ns.n < cfg_.min_leaf_size) {
                revert();
                return false;
            }
            log_ratio += leaf_loglik(ns) - leaf_loglik(old_stats[static_cast<std::size_t>(id)]);
        }
        if (!accept(log_ratio)) {
            revert();
            return false;
        }
        leaf_of = std::move(new_leaf_of);
        return true;
    }

    BartConfig cfg_;
    rng::Engine eng_;
    std::vector<int> y_;
    int p_ = 0;
    CutpointGrid grid_;
    std::vector<int> ranks_;
    double offset_ = 0.0;
    double leaf_var_ = 0.0;
    std::vector<RegressionTree> trees_;
    std::vector<std::vector<int>> leaf_of_;
    std::vector<double> fit_;
    std::vector<double> latent_;
    std::vector<double> residual_;
    std::vector<double> before_;
    BartMoveStats stats_;
};

// Posterior draws of Phi(offset + sum of trees) at the rows of `x_eval`,
// from a chain fitted to (y, x_train). Result is draws x rows(x_eval).
inline Eigen::MatrixXd fit_probit_bart(std::span<const int> y, const Eigen::MatrixXd& x_train,
                                       const Eigen::MatrixXd& x_eval, const BartConfig& cfg, rng::Engine eng,
                                       BartMoveStats* move_stats = nullptr) {
    ProbitBart model(y, x_train, cfg, std::move(eng));
    const auto eval_ranks = model.grid().ranks(x_eval);
    const auto m = static_cast<std::size_t>(x_eval.rows());
    Eigen::MatrixXd draws(cfg.mcmc.draws, x_eval.rows());
    std::vector<double> latent(m);
    for (int it = 0; it < cfg.mcmc.burn_in; ++it) model.step();
    for (int d = 0; d < cfg.mcmc.draws; ++d) {
        for (int t = 0; t < cfg.mcmc.thin; ++t) model.step();
        model.predict_latent(eval_ranks, latent);
        for (std::size_t i = 0; i < m; ++i) {
            const double prob = stats::normal_cdf(model.offset() + latent[i]);
            draws(d, static_cast<Eigen::Index>(i)) = std::clamp(prob, 1e-12, 1.0 - 1e-12);
        }
    }
    if (move_stats) *move_stats = model.move_stats();
    return draws;
}

inline Eigen::MatrixXd fit_probit_bart(std::span<const int> y, const Eigen::MatrixXd& x, const BartConfig& cfg,
                                       rng::Engine eng) {
    return fit_probit_bart(y, x, x, cfg, std::move(eng));
}

}  // namespace otr
