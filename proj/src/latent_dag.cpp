#include "lvcd/latent_dag.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace lvcd {

std::string to_string(const NodeId& v) {
    return (v.kind == NodeKind::Latent ? "L" : "X") + std::to_string(v.index + 1);
}

LatentDag::LatentDag(int m, int n) : m_(m), n_(n) {
    if (m < 0 || n < 0) throw std::invalid_argument("LatentDag: negative dimension");
    if (m + n > 64) throw std::invalid_argument("LatentDag: m + n must be <= 64");
    meas_parents_.assign(static_cast<size_t>(m), 0);
    lat_parents_.assign(static_cast<size_t>(n), 0);
}

int LatentDag::edge_count() const {
    int e = 0;
    for (uint64_t w : meas_parents_) e += popcount64(w);
    for (uint64_t w : lat_parents_) e += popcount64(w);
    return e;
}

bool LatentDag::measurement_edge(int latent, int measured) const {
    if (latent < 0 || latent >= n_ || measured < 0 || measured >= m_)
        throw std::out_of_range("measurement_edge: index out of range");
    return (meas_parents_[measured] >> latent) & 1u;
}

void LatentDag::set_measurement_edge(int latent, int measured, bool present) {
    if (latent < 0 || latent >= n_ || measured < 0 || measured >= m_)
        throw std::out_of_range("set_measurement_edge: index out of range");
    if (present)
        meas_parents_[measured] |= (uint64_t{1} << latent);
    else
        meas_parents_[measured] &= ~(uint64_t{1} << latent);
}

bool LatentDag::latent_edge(int parent, int child) const {
    if (parent < 0 || parent >= n_ || child < 0 || child >= n_)
        throw std::out_of_range("latent_edge: index out of range");
    if (parent <= child) return false;
    return (lat_parents_[child] >> parent) & 1u;
}

void LatentDag::set_latent_edge(int parent, int child, bool present) {
    if (parent < 0 || parent >= n_ || child < 0 || child >= n_)
        throw std::out_of_range("set_latent_edge: index out of range");
    if (parent <= child)
        throw std::invalid_argument("set_latent_edge: latent edges must point from a higher to a lower index");
    if (present)
        lat_parents_[child] |= (uint64_t{1} << parent);
    else
        lat_parents_[child] &= ~(uint64_t{1} << parent);
}

std::vector<std::pair<int, int>> LatentDag::latent_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int child = 0; child < n_; ++child)
        for_each_bit(lat_parents_[child], [&](int parent) { out.emplace_back(parent, child); });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<int, int>> LatentDag::measurement_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < m_; ++i)
        for_each_bit(meas_parents_[i], [&](int latent) { out.emplace_back(latent, i); });
    std::sort(out.begin(), out.end());
    return out;
}

int LatentDag::flat(const NodeId& v) const {
    if (v.kind == NodeKind::Latent) {
        if (v.index < 0 || v.index >= n_) throw std::out_of_range("flat: latent index");
        return v.index;
    }
    if (v.index < 0 || v.index >= m_) throw std::out_of_range("flat: measured index");
    return n_ + v.index;
}

NodeId LatentDag::unflat(int flat_id) const {
    if (flat_id < 0 || flat_id >= num_nodes()) throw std::out_of_range("unflat");
    return flat_id < n_ ? latent_node(flat_id) : measured_node(flat_id - n_);
}

uint64_t LatentDag::parent_mask(int flat_id) const {
    if (flat_id < 0 || flat_id >= num_nodes()) throw std::out_of_range("parent_mask");
    return flat_id < n_ ? lat_parents_[flat_id] : meas_parents_[flat_id - n_];
}

uint64_t LatentDag::child_mask(int flat_id) const {
    if (flat_id < 0 || flat_id >= num_nodes()) throw std::out_of_range("child_mask");
    uint64_t out = 0;
    if (flat_id >= n_) return 0;  // measured variables are sinks
    for (int c = 0; c < n_; ++c)
        if ((lat_parents_[c] >> flat_id) & 1u) out |= (uint64_t{1} << c);
    for (int i = 0; i < m_; ++i)
        if ((meas_parents_[i] >> flat_id) & 1u) out |= (uint64_t{1} << (n_ + i));
    return out;
}

uint64_t LatentDag::adjacent_mask(int flat_id) const { return parent_mask(flat_id) | child_mask(flat_id); }

int LatentDag::measured_child_count(int latent) const {
    if (latent < 0 || latent >= n_) throw std::out_of_range("measured_child_count");
    int c = 0;
    for (int i = 0; i < m_; ++i) c += (meas_parents_[i] >> latent) & 1u;
    return c;
}

int LatentDag::latent_parent_count_of_measured(int measured) const {
    if (measured < 0 || measured >= m_) throw std::out_of_range("latent_parent_count_of_measured");
    return popcount64(meas_parents_[measured]);
}

NodeGraph::NodeGraph(const LatentDag& g) : m(g.m()), n(g.n()), num(g.num_nodes()) {
    parents.resize(num);
    children.assign(static_cast<size_t>(num), 0);
    adjacent.resize(num);
    for (int v = 0; v < num; ++v) parents[v] = g.parent_mask(v);
    for (int v = 0; v < num; ++v)
        for_each_bit(parents[v], [&](int p) { children[p] |= (uint64_t{1} << v); });
    for (int v = 0; v < num; ++v) adjacent[v] = parents[v] | children[v];
}

uint64_t NodeGraph::ancestors(uint64_t seed) const {
    uint64_t reached = seed;
    uint64_t frontier = seed;
    while (frontier) {
        uint64_t next = 0;
        for_each_bit(frontier, [&](int v) { next |= parents[v]; });
        frontier = next & ~reached;
        reached |= next;
    }
    return reached;
}

uint64_t NodeGraph::descendants(uint64_t seed) const {
    uint64_t visited = seed;
    uint64_t frontier = seed;
    while (frontier) {
        uint64_t next = 0;
        for_each_bit(frontier, [&](int v) { next |= children[v]; });
        frontier = next & ~visited;
        visited |= next;
    }
    return visited & ~seed;
}

std::set<std::pair<int, int>> skeleton(const LatentDag& g) {
    std::set<std::pair<int, int>> edges;
    const int n = g.n();
    for (auto [p, c] : g.latent_edges()) edges.emplace(std::min(p, c), std::max(p, c));
    for (auto [l, x] : g.measurement_edges()) edges.emplace(l, n + x);
    return edges;
}

std::set<std::tuple<int, int, int>> v_structures(const LatentDag& g) {
    std::set<std::tuple<int, int, int>> out;
    NodeGraph ng(g);
    for (int c = 0; c < ng.num; ++c) {
        std::vector<int> pars;
        for_each_bit(ng.parents[c], [&](int p) { pars.push_back(p); });
        for (size_t i = 0; i < pars.size(); ++i)
            for (size_t j = i + 1; j < pars.size(); ++j) {
                int a = pars[i], b = pars[j];
                if (!((ng.adjacent[a] >> b) & 1u)) out.emplace(a, c, b);
            }
    }
    return out;
}

bool d_separated_masks(const NodeGraph& g, uint64_t a_mask, uint64_t b_mask, uint64_t z_mask) {
    // Reachability in the moralized ancestral graph with z removed.
    const uint64_t relevant = g.ancestors(a_mask | b_mask | z_mask);
    std::vector<uint64_t> und(static_cast<size_t>(g.num), 0);
    for_each_bit(relevant, [&](int v) {
        uint64_t pp = g.parents[v] & relevant;
        for_each_bit(pp, [&](int p) {
            und[v] |= (uint64_t{1} << p);
            und[p] |= (uint64_t{1} << v);
            und[p] |= pp & ~(uint64_t{1} << p);  // marry co-parents
        });
    });
    const uint64_t blocked = z_mask;
    uint64_t reached = a_mask & ~blocked;
    uint64_t frontier = reached;
    while (frontier) {
        uint64_t next = 0;
        for_each_bit(frontier, [&](int v) { next |= und[v]; });
        next &= relevant & ~blocked & ~reached;
        if (next & b_mask) return false;
        reached |= next;
        frontier = next;
    }
    return (reached & b_mask) == 0;
}

static uint64_t mask_of(const LatentDag& g, const std::set<NodeId>& s) {
    uint64_t mask = 0;
    for (const NodeId& v : s) mask |= (uint64_t{1} << g.flat(v));
    return mask;
}

bool d_separated(const LatentDag& g, const std::set<NodeId>& a, const std::set<NodeId>& b,
                 const std::set<NodeId>& z) {
    if (a.empty() || b.empty()) throw std::invalid_argument("d_separated: a and b must be non-empty");
    const uint64_t am = mask_of(g, a), bm = mask_of(g, b), zm = mask_of(g, z);
    if ((am & bm) || (am & zm) || (bm & zm))
        throw std::invalid_argument("d_separated: node sets must be pairwise disjoint");
    NodeGraph ng(g);
    return d_separated_masks(ng, am, bm, zm);
}

namespace {

// Skeleton and v-structures of g with latent labels permuted by perm
// (perm[j] = new label of latent j), encoded for cheap comparison.
struct MecEncoding {
    std::vector<uint64_t> skeleton_words;
    std::vector<uint64_t> triples;

    bool operator==(const MecEncoding&) const = default;
    bool operator<(const MecEncoding& o) const {
        if (skeleton_words != o.skeleton_words) return skeleton_words < o.skeleton_words;
        return triples < o.triples;
    }
};

int pair_index(int a, int b, int num) {
    if (a > b) std::swap(a, b);
    return a * num - a * (a + 1) / 2 + (b - a - 1);
}

MecEncoding encode_mec(const std::set<std::pair<int, int>>& skel,
                       const std::set<std::tuple<int, int, int>>& vstr, int n, int num,
                       const std::vector<int>& perm) {
    auto map_node = [&](int v) { return v < n ? perm[v] : v; };
    MecEncoding enc;
    enc.skeleton_words.assign(static_cast<size_t>(num * (num - 1) / 2 + 63) / 64, 0);
    for (auto [a, b] : skel) {
        int idx = pair_index(map_node(a), map_node(b), num);
        enc.skeleton_words[idx / 64] |= (uint64_t{1} << (idx % 64));
    }
    enc.triples.reserve(vstr.size());
    for (auto [a, c, b] : vstr) {
        int ma = map_node(a), mb = map_node(b), mc = map_node(c);
        if (ma > mb) std::swap(ma, mb);
        enc.triples.push_back((uint64_t{static_cast<uint64_t>(ma)} << 16) |
                              (uint64_t{static_cast<uint64_t>(mc)} << 8) |
                              static_cast<uint64_t>(mb));
    }
    std::sort(enc.triples.begin(), enc.triples.end());
    return enc;
}

}  // namespace

bool markov_equivalent(const LatentDag& g1, const LatentDag& g2) {
    if (g1.m() != g2.m())
        throw std::invalid_argument("markov_equivalent: graphs must share the measured variable set");
    if (g1.n() != g2.n()) return false;
    const int n = g1.n(), num = g1.num_nodes();
    if (g1.edge_count() != g2.edge_count()) return false;

    auto skel1 = skeleton(g1);
    auto skel2 = skeleton(g2);
    if (skel1.size() != skel2.size()) return false;
    auto vs1 = v_structures(g1);
    auto vs2 = v_structures(g2);
    if (vs1.size() != vs2.size()) return false;

    // Cheap permutation-invariant screens: measured degrees are label-fixed,
    // latent degrees compare as a multiset.
    {
        NodeGraph a(g1), b(g2);
        std::vector<int> da, db;
        for (int v = 0; v < num; ++v) {
            int x = popcount64(a.adjacent[v]), y = popcount64(b.adjacent[v]);
            if (v < n) {
                da.push_back(x);
                db.push_back(y);
            } else if (x != y) {
                return false;
            }
        }
        std::sort(da.begin(), da.end());
        std::sort(db.begin(), db.end());
        if (da != db) return false;
    }

    std::vector<int> identity(n);
    std::iota(identity.begin(), identity.end(), 0);
    const MecEncoding target = encode_mec(skel1, vs1, n, num, identity);
    std::vector<int> perm = identity;
    do {
        if (encode_mec(skel2, vs2, n, num, perm) == target) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

std::vector<uint64_t> mec_signature(const LatentDag& g) {
    const int n = g.n(), num = g.num_nodes();
    auto skel = skeleton(g);
    auto vstr = v_structures(g);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    bool have = false;
    MecEncoding best;
    do {
        MecEncoding enc = encode_mec(skel, vstr, n, num, perm);
        if (!have || enc < best) {
            best = std::move(enc);
            have = true;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    std::vector<uint64_t> sig;
    sig.push_back((uint64_t{static_cast<uint64_t>(g.m())} << 32) | static_cast<uint64_t>(n));
    sig.insert(sig.end(), best.skeleton_words.begin(), best.skeleton_words.end());
    sig.push_back(0xffffffffffffffffULL);  // separator
    sig.insert(sig.end(), best.triples.begin(), best.triples.end());
    return sig;
}

Cpdag cpdag(const LatentDag& g) {
    const int num = g.num_nodes();
    // status[a][b]: 0 none, 1 undirected, 2 directed a->b.
    std::vector<std::vector<int>> status(num, std::vector<int>(num, 0));
    auto skel = skeleton(g);
    for (auto [a, b] : skel) status[a][b] = status[b][a] = 1;

    auto orient = [&](int a, int b) {
        status[a][b] = 2;
        status[b][a] = 0;
    };
    for (auto [a, c, b] : v_structures(g)) {
        orient(a, c);
        orient(b, c);
    }

    // Meek rules R1-R3 to fixpoint (complete without background knowledge).
    bool changed = true;
    while (changed) {
        changed = false;
        for (int b = 0; b < num; ++b)
            for (int c = 0; c < num; ++c) {
                if (status[b][c] != 1) continue;
                // R1: a -> b, b - c, a and c non-adjacent  =>  b -> c
                bool fire = false;
                for (int a = 0; a < num && !fire; ++a)
                    if (status[a][b] == 2 && status[a][c] == 0 && status[c][a] == 0 && a != c) fire = true;
                // R2: b -> x -> c and b - c  =>  b -> c
                if (!fire)
                    for (int x = 0; x < num && !fire; ++x)
                        if (status[b][x] == 2 && status[x][c] == 2) fire = true;
                // R3: b - x, b - y, x -> c, y -> c, x and y non-adjacent  =>  b -> c
                if (!fire) {
                    for (int x = 0; x < num && !fire; ++x) {
                        if (status[b][x] != 1 || status[x][c] != 2) continue;
                        for (int y = x + 1; y < num && !fire; ++y)
                            if (status[b][y] == 1 && status[y][c] == 2 && status[x][y] == 0 &&
                                status[y][x] == 0)
                                fire = true;
                    }
                }
                if (fire) {
                    orient(b, c);
                    changed = true;
                }
            }
    }

    Cpdag out;
    out.m = g.m();
    out.n = g.n();
    for (int a = 0; a < num; ++a)
        for (int b = 0; b < num; ++b) {
            if (status[a][b] == 2) out.directed.emplace(a, b);
            if (status[a][b] == 1 && a < b) out.undirected.emplace(a, b);
        }
    return out;
}

// ---- JSON ---------------------------------------------------------------

std::string latent_dag_to_json(const LatentDag& g) {
    nlohmann::json j;
    j["m"] = g.m();
    j["n"] = g.n();
    auto le = nlohmann::json::array();
    for (auto [p, c] : g.latent_edges()) le.push_back({p, c});
    auto me = nlohmann::json::array();
    for (auto [l, x] : g.measurement_edges()) me.push_back({l, x});
    j["latent_edges"] = le;
    j["measurement_edges"] = me;
    return j.dump(2);
}

LatentDag build_latent_dag(int m, int n, const std::vector<std::pair<int, int>>& lat,
                           const std::vector<std::pair<int, int>>& meas) {
    if (m < 0 || n < 0 || m + n > 64) throw std::invalid_argument("build_latent_dag: bad dimensions");
    for (auto [p, c] : lat)
        if (p < 0 || p >= n || c < 0 || c >= n || p == c)
            throw std::invalid_argument("build_latent_dag: latent edge index out of range");
    for (auto [l, x] : meas)
        if (l < 0 || l >= n || x < 0 || x >= m)
            throw std::invalid_argument("build_latent_dag: measurement edge index out of range");

    // Check acyclicity of the latent edges; relabel topologically if they are
    // acyclic but not already in parent-index > child-index form.
    std::vector<std::vector<int>> ch(n);
    std::vector<int> indeg(n, 0);
    for (auto [p, c] : lat) {
        ch[p].push_back(c);
        ++indeg[c];
    }
    std::vector<int> order;  // topological, parents first
    {
        std::priority_queue<int> ready;  // prefer high indices first for stability
        for (int v = 0; v < n; ++v)
            if (indeg[v] == 0) ready.push(v);
        std::vector<int> deg = indeg;
        while (!ready.empty()) {
            int v = ready.top();
            ready.pop();
            order.push_back(v);
            for (int c : ch[v])
                if (--deg[c] == 0) ready.push(c);
        }
        if (static_cast<int>(order.size()) != n)
            throw std::invalid_argument("build_latent_dag: latent edges imply a cycle");
    }

    bool already_upper = true;
    for (auto [p, c] : lat)
        if (p <= c) already_upper = false;

    std::vector<int> relabel(n);
    if (already_upper) {
        std::iota(relabel.begin(), relabel.end(), 0);
    } else {
        // Parents first in `order`; give them the highest indices.
        for (int pos = 0; pos < n; ++pos) relabel[order[pos]] = n - 1 - pos;
    }

    LatentDag g(m, n);
    for (auto [p, c] : lat) g.set_latent_edge(relabel[p], relabel[c]);
    for (auto [l, x] : meas) g.set_measurement_edge(relabel[l], x);
    return g;
}

LatentDag latent_dag_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("graph JSON parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("m") || !j.contains("n"))
        throw std::invalid_argument("graph JSON: expected object with fields m and n");
    const int m = j.at("m").get<int>();
    const int n = j.at("n").get<int>();

    std::vector<std::pair<int, int>> lat, meas;
    for (const auto& e : j.value("latent_edges", nlohmann::json::array())) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph JSON: bad latent edge");
        lat.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    for (const auto& e : j.value("measurement_edges", nlohmann::json::array())) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph JSON: bad measurement edge");
        meas.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    try {
        return build_latent_dag(m, n, lat, meas);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("graph JSON: ") + e.what());
    }
}

}  // namespace lvcd
