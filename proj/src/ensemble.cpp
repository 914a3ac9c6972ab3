#include "catadist/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace catadist {

FlaggedEnsemble::FlaggedEnsemble(std::vector<Branch> branches, bool do_validate)
    : branches_(std::move(branches)) {
    if (do_validate) validate();
}

double FlaggedEnsemble::total_weight() const {
    double w = 0.0;
    for (const auto& b : branches_) w += b.weight;
    return w;
}

int FlaggedEnsemble::body_dim() const {
    if (branches_.empty()) throw DimensionError("FlaggedEnsemble: no branches");
    return branches_.front().body.total_dim();
}

int FlaggedEnsemble::max_label() const {
    int m = 0;
    for (const auto& b : branches_) m = std::max(m, b.label);
    return m;
}

const Branch& FlaggedEnsemble::branch_with_label(int label) const {
    for (const auto& b : branches_) {
        if (b.label == label) return b;
    }
    throw DimensionError("FlaggedEnsemble: no branch with label " + std::to_string(label));
}

void FlaggedEnsemble::validate() const {
    if (branches_.empty()) throw InvariantError("FlaggedEnsemble: empty");
    std::set<int> labels;
    int dim = branches_.front().body.total_dim();
    double w = 0.0;
    for (const auto& b : branches_) {
        if (b.weight < -1e-12 || b.weight > 1.0 + 1e-10)
            throw InvariantError("FlaggedEnsemble: branch weight outside [0, 1]");
        if (!labels.insert(b.label).second)
            throw InvariantError("FlaggedEnsemble: duplicate label " + std::to_string(b.label));
        if (b.body.total_dim() != dim)
            throw InvariantError("FlaggedEnsemble: branch body dimensions differ");
        w += b.weight;
    }
    if (w > 1.0 + 1e-10) throw InvariantError("FlaggedEnsemble: weights sum to more than 1");
}

State FlaggedEnsemble::materialize(int flag_dim) const {
    int fd = flag_dim > 0 ? flag_dim : max_label();
    int bd = body_dim();
    check_dim_cap(static_cast<long long>(bd) * fd, static_cast<long long>(bd) * fd);
    Mat out = Mat::Zero(bd * fd, bd * fd);
    for (const auto& b : branches_) {
        if (b.label < 1 || b.label > fd)
            throw DimensionError("materialize: label outside flag register");
        out += b.weight * kron(b.body.mat, basis_op(fd, b.label - 1, b.label - 1));
    }
    SystemLayout l = SystemLayout::single("body", bd).concat(SystemLayout::single("flag", fd));
    double w = total_weight();
    NormClass nc = std::abs(w - 1.0) <= 1e-10 ? NormClass::normalized : NormClass::subnormalized;
    return State(std::move(out), std::move(l), nc, false);
}

State FlaggedEnsemble::average_marginal(const std::vector<int>& keep_indices) const {
    State acc;
    bool first = true;
    for (const auto& b : branches_) {
        Mat red = partial_trace_indices(b.body.mat, b.body.layout.dims(), keep_indices);
        if (first) {
            auto sorted = keep_indices;
            std::sort(sorted.begin(), sorted.end());
            acc = State(b.weight * red, b.body.layout.select(sorted), NormClass::subnormalized,
                        false);
            first = false;
        } else {
            if (red.rows() != acc.mat.rows())
                throw DimensionError("average_marginal: branch marginal dims differ");
            acc.mat += b.weight * red;
        }
    }
    double tr = acc.trace_real();
    if (std::abs(tr - 1.0) <= 1e-10) acc.norm_class = NormClass::normalized;
    return acc;
}

FlaggedEnsemble FlaggedEnsemble::branch_marginal(const std::vector<int>& keep_indices) const {
    std::vector<Branch> out;
    out.reserve(branches_.size());
    for (const auto& b : branches_) {
        std::vector<std::string> keep;
        for (int i : keep_indices) keep.push_back(b.body.layout.label(i));
        out.push_back({b.weight, partial_trace_state(b.body, keep), b.label});
    }
    return FlaggedEnsemble(std::move(out), false);
}

FlaggedEnsemble FlaggedEnsemble::map_bodies(
    const std::function<State(const State&)>& fn) const {
    std::vector<Branch> out;
    out.reserve(branches_.size());
    for (const auto& b : branches_) out.push_back({b.weight, fn(b.body), b.label});
    return FlaggedEnsemble(std::move(out), false);
}

double flagged_trace_distance(const FlaggedEnsemble& a, const FlaggedEnsemble& b) {
    std::set<int> labels;
    for (const auto& br : a.branches()) labels.insert(br.label);
    for (const auto& br : b.branches()) labels.insert(br.label);
    double total = 0.0;
    for (int l : labels) {
        const Branch* pa = nullptr;
        const Branch* pb = nullptr;
        for (const auto& br : a.branches()) {
            if (br.label == l) pa = &br;
        }
        for (const auto& br : b.branches()) {
            if (br.label == l) pb = &br;
        }
        if (pa && pb) {
            total += 0.5 * trace_norm(pa->weight * pa->body.mat - pb->weight * pb->body.mat);
        } else if (pa) {
            total += 0.5 * pa->weight * trace_norm(pa->body.mat);
        } else {
            total += 0.5 * pb->weight * trace_norm(pb->body.mat);
        }
    }
    return total;
}

FlaggedEnsemble cyclic_shift_labels(const FlaggedEnsemble& e) {
    int m = e.branch_count();
    std::set<int> labels;
    for (const auto& b : e.branches()) labels.insert(b.label);
    for (int i = 1; i <= m; ++i) {
        if (!labels.count(i))
            throw DimensionError("cyclic_shift_labels: labels must be exactly 1..m");
    }
    std::vector<Branch> out = e.branches();
    for (auto& b : out) b.label = (b.label % m) + 1;
    return FlaggedEnsemble(std::move(out), false);
}

std::vector<std::vector<int>> slot_groups(const SystemLayout& layout, int slots) {
    if (slots < 1) throw DimensionError("slot_groups: slots must be >= 1");
    long long total = layout.total_dim();
    double root = std::pow(static_cast<double>(total), 1.0 / slots);
    long long slot_dim = std::llround(root);
    // tolerate rounding, then verify exactly
    long long check = 1;
    for (int i = 0; i < slots; ++i) check *= slot_dim;
    if (check != total)
        throw DimensionError("slot_groups: total dimension is not a perfect slot power");
    std::vector<std::vector<int>> groups;
    std::vector<int> cur;
    long long acc = 1;
    for (int i = 0; i < layout.size(); ++i) {
        cur.push_back(i);
        acc *= layout.dim(i);
        if (acc == slot_dim) {
            groups.push_back(cur);
            cur.clear();
            acc = 1;
        } else if (acc > slot_dim) {
            throw DimensionError("slot_groups: subsystem boundaries do not align with slots");
        }
    }
    if (!cur.empty() || static_cast<int>(groups.size()) != slots)
        throw DimensionError("slot_groups: decomposition impossible");
    return groups;
}

FlaggedEnsemble cyclic_shift_quantum(const FlaggedEnsemble& e, int slots) {
    return e.map_bodies([slots](const State& body) {
        auto groups = slot_groups(body.layout, slots);
        std::vector<int> order;
        for (int i : groups.back()) order.push_back(i);
        for (int g = 0; g + 1 < slots; ++g) {
            for (int i : groups[g]) order.push_back(i);
        }
        return permute_state(body, order);
    });
}

}  // namespace catadist
