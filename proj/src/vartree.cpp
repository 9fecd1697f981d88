#include "varlat/vartree.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "varlat/metrics.hpp"

namespace varlat {

namespace {

// All frames within `root` matching `path`. The root element matches on
// func_id only (top-level site tags are not call sites).
void collect_occurrences(const Invocation& root, const NodePath& path,
                         std::vector<const Invocation*>& out) {
    if (path.empty() || root.func_id != path.front().func) return;
    std::vector<const Invocation*> frontier{&root};
    for (std::size_t i = 1; i < path.size(); ++i) {
        std::vector<const Invocation*> next;
        for (const Invocation* f : frontier)
            for (const Invocation& c : f->children)
                if (c.func_id == path[i].func && c.site_tag == path[i].site)
                    next.push_back(&c);
        frontier = std::move(next);
    }
    out.insert(out.end(), frontier.begin(), frontier.end());
}

int invocation_height(const Invocation& inv, Heights& h) {
    int height = 0;
    for (const auto& c : inv.children) height = std::max(height, 1 + invocation_height(c, h));
    auto it = h.by_func.find(inv.func_id);
    if (it == h.by_func.end())
        h.by_func.emplace(inv.func_id, height);
    else
        it->second = std::max(it->second, height);
    return height;
}

bool path_has_children(const std::vector<const Invocation*>& roots, const NodePath& path) {
    std::vector<const Invocation*> occ;
    for (const Invocation* r : roots) collect_occurrences(*r, path, occ);
    for (const Invocation* o : occ)
        if (!o->children.empty()) return true;
    return false;
}

}  // namespace

std::string path_to_string(const NodePath& path, const FunctionRegistry& reg) {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += "/";
        out += reg.contains(path[i].func) ? reg.name_of(path[i].func)
                                          : "#" + std::to_string(path[i].func);
        if (path[i].site != 0) out += "@" + std::to_string(path[i].site);
    }
    return out;
}

std::string factor_to_string(const FactorId& id, const FunctionRegistry& reg) {
    auto comp = [&](const FactorComponent& c) {
        std::string n = reg.contains(c.func) ? reg.name_of(c.func)
                                             : "#" + std::to_string(c.func);
        return c.body ? "body:" + n : n;
    };
    if (id.is_cov) return "Cov(" + comp(id.a) + "," + comp(id.b) + ")";
    return "Var(" + comp(id.a) + ")";
}

SampleMatrix build_sample_matrix(const std::vector<const Invocation*>& roots,
                                 const NodePath& parent) {
    SampleMatrix m;
    m.parent = parent;

    // First pass: discover child columns across every occurrence.
    std::set<PathElem> columns;
    std::size_t n_rows = 0;
    for (const Invocation* r : roots) {
        std::vector<const Invocation*> occ;
        collect_occurrences(*r, parent, occ);
        if (occ.empty()) continue;
        ++n_rows;
        for (const Invocation* o : occ)
            for (const Invocation& c : o->children)
                columns.insert(PathElem{c.func_id, c.site_tag});
    }
    if (n_rows == 0) throw std::invalid_argument("build_sample_matrix: parent never observed");
    if (n_rows < 2) throw std::invalid_argument("build_sample_matrix: fewer than 2 samples");
    m.child_columns.assign(columns.begin(), columns.end());

    std::map<PathElem, std::size_t> col_index;
    for (std::size_t i = 0; i < m.child_columns.size(); ++i)
        col_index.emplace(m.child_columns[i], i);

    for (const Invocation* r : roots) {
        std::vector<const Invocation*> occ;
        collect_occurrences(*r, parent, occ);
        if (occ.empty()) continue;
        std::vector<double> row(m.n_cols(), 0.0);
        double parent_dur = 0.0;
        for (const Invocation* o : occ) {
            parent_dur += static_cast<double>(o->duration_ns());
            row.back() += static_cast<double>(o->body_ns());
            for (const Invocation& c : o->children)
                row[col_index.at(PathElem{c.func_id, c.site_tag})] +=
                    static_cast<double>(c.duration_ns());
        }
        m.rows.push_back(std::move(row));
        m.parent_durations.push_back(parent_dur);
    }
    return m;
}

std::vector<VarianceTerm> decompose_variance(const SampleMatrix& matrix,
                                             double root_variance) {
    if (matrix.rows.size() < 2)
        throw std::invalid_argument("decompose_variance: fewer than 2 rows");
    CoMoment acc(matrix.n_cols());
    for (const auto& r : matrix.rows) acc.add(r);

    std::vector<VarianceTerm> terms;
    std::size_t k = matrix.n_cols();
    for (std::size_t i = 0; i < k; ++i) {
        VarianceTerm t;
        t.parent = matrix.parent;
        t.col_i = static_cast<int>(i);
        t.value = acc.variance(i);
        t.contribution = root_variance > 0 ? t.value / root_variance : 0.0;
        terms.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            VarianceTerm t;
            t.parent = matrix.parent;
            t.col_i = static_cast<int>(i);
            t.col_j = static_cast<int>(j);
            t.value = acc.covariance(i, j);
            // Eq. 1 counts each covariance twice.
            t.contribution = root_variance > 0 ? 2.0 * t.value / root_variance : 0.0;
            terms.push_back(std::move(t));
        }
    }
    return terms;
}

Heights compute_heights(const std::vector<const Invocation*>& roots) {
    if (roots.empty()) throw std::invalid_argument("compute_heights: empty forest");
    Heights h;
    for (const Invocation* r : roots) invocation_height(*r, h);
    for (const Invocation* r : roots) h.call_graph = std::max(h.call_graph, h.of(r->func_id));
    return h;
}

VarianceTree build_variance_tree(const std::vector<const Invocation*>& roots) {
    if (roots.empty()) throw std::invalid_argument("build_variance_tree: no root samples");
    FuncId root_func = roots.front()->func_id;
    for (const Invocation* r : roots)
        if (r->func_id != root_func)
            throw std::invalid_argument("build_variance_tree: mixed root functions");

    VarianceTree tree;
    tree.root_path = NodePath{PathElem{root_func, 0}};
    tree.n_samples = roots.size();
    {
        CoMoment acc(1);
        for (const Invocation* r : roots)
            acc.add({static_cast<double>(r->duration_ns())});
        tree.root_variance = acc.variance(0);
    }

    std::deque<NodePath> pending{tree.root_path};
    while (!pending.empty()) {
        NodePath parent = std::move(pending.front());
        pending.pop_front();
        if (!path_has_children(roots, parent)) continue;
        SampleMatrix m;
        try {
            m = build_sample_matrix(roots, parent);
        } catch (const std::invalid_argument&) {
            continue;  // fewer than 2 samples at this depth
        }
        auto terms = decompose_variance(m, tree.root_variance);
        tree.terms.insert(tree.terms.end(), terms.begin(), terms.end());
        for (const PathElem& col : m.child_columns) {
            NodePath child = parent;
            child.push_back(col);
            pending.push_back(std::move(child));
        }
        tree.matrices.push_back(std::move(m));
    }
    return tree;
}

FactorId factor_of(const VarianceTerm& term, const SampleMatrix& matrix) {
    auto component = [&](int col) {
        if (col == static_cast<int>(matrix.child_columns.size()))
            return FactorComponent{matrix.parent.back().func, true};
        return FactorComponent{matrix.child_columns[static_cast<std::size_t>(col)].func, false};
    };
    FactorId id;
    if (term.col_j < 0) {
        id.is_cov = false;
        id.a = component(term.col_i);
    } else {
        id.is_cov = true;
        id.a = component(term.col_i);
        id.b = component(term.col_j);
        if (id.b < id.a) std::swap(id.a, id.b);
    }
    return id;
}

std::vector<Factor> aggregate_factors(const VarianceTree& tree, const Heights& heights) {
    std::map<NodePath, const SampleMatrix*> by_parent;
    for (const auto& m : tree.matrices) by_parent.emplace(m.parent, &m);

    std::map<FactorId, Factor> acc;
    auto add = [&](const FactorId& id, double value, double contribution) {
        auto [it, fresh] = acc.emplace(id, Factor{id, 0.0, 0.0, 0, 0, 0.0});
        (void)fresh;
        it->second.total_value += value;
        it->second.contribution += contribution;
    };

    // The root node Var(v) is the quantity being explained, not a
    // candidate factor; only its descendants are aggregated.
    for (const auto& t : tree.terms)
        add(factor_of(t, *by_parent.at(t.parent)), t.value, t.contribution);

    auto comp_height = [&](const FactorComponent& c) { return c.body ? 0 : heights.of(c.func); };

    std::vector<Factor> out;
    for (auto& [id, f] : acc) {
        f.height = id.is_cov ? std::max(comp_height(id.a), comp_height(id.b))
                             : comp_height(id.a);
        std::int64_t diff = heights.call_graph - f.height;
        f.specificity = diff * diff;
        f.score = static_cast<double>(f.specificity) * f.total_value;
        out.push_back(f);
    }
    return out;
}

std::vector<Factor> select_factors(std::vector<Factor> factors, const SelectionParams& params) {
    if (params.k < 1) throw std::invalid_argument("select_factors: k must be >= 1");
    if (params.d < 0.0 || params.d > 1.0)
        throw std::invalid_argument("select_factors: d must be in [0,1]");
    std::sort(factors.begin(), factors.end(), [](const Factor& a, const Factor& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.contribution != b.contribution) return a.contribution > b.contribution;
        return a.id < b.id;
    });
    // Alg.-1 window: examine the first k slots, keep those meeting d.
    std::vector<Factor> out;
    for (std::size_t i = 0; i < factors.size() && i < params.k; ++i)
        if (factors[i].contribution >= params.d) out.push_back(factors[i]);
    return out;
}

AnalysisReport analyze(const std::vector<const Invocation*>& roots,
                       const SelectionParams& params) {
    AnalysisReport rep;
    rep.tree = build_variance_tree(roots);
    rep.heights = compute_heights(roots);
    rep.all_factors = aggregate_factors(rep.tree, rep.heights);
    rep.selected = select_factors(rep.all_factors, params);
    return rep;
}

}  // namespace varlat
