#include "relex/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "relex/errors.hpp"

namespace relex {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

std::vector<std::string> split_relation_path(const std::string& name) {
  require_data(!name.empty(), "empty relation name");
  std::vector<std::string> parts;
  std::string cur;
  for (size_t i = name.front() == '/' ? 1 : 0; i < name.size(); ++i) {
    if (name[i] == '/') {
      require_data(!cur.empty(), "malformed relation name '" + name + "'");
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += name[i];
    }
  }
  require_data(!cur.empty(), "malformed relation name '" + name + "'");
  parts.push_back(cur);
  return parts;
}

std::string join_prefix(const std::string& original, const std::vector<std::string>& parts,
                        size_t count) {
  std::string out = original.front() == '/' ? "/" : "";
  for (size_t i = 0; i < count; ++i) {
    if (i) out += '/';
    out += parts[i];
  }
  return out;
}

// Canonical cluster numbering: clusters appear in order of their first point.
std::vector<size_t> canonicalize_assignment(const std::vector<size_t>& raw, size_t k) {
  std::vector<size_t> remap(k, static_cast<size_t>(-1));
  size_t next = 0;
  std::vector<size_t> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (remap[raw[i]] == static_cast<size_t>(-1)) remap[raw[i]] = next++;
    out[i] = remap[raw[i]];
  }
  return out;
}

std::string cluster_id(int layer, size_t idx) {
  return "C" + std::to_string(layer) + "." + std::to_string(idx);
}

// Shared tail of the clustering builders: layer-0 relations, one node per
// cluster per internal level, virtual root on top. partitions[l][i] is the
// cluster of item i at internal level l+1, where level-(l+1) items are the
// level-l clusters.
HierarchyGraph assemble_clustered(const std::vector<std::string>& relations,
                                  const std::vector<std::vector<size_t>>& partitions) {
  HierarchyGraph g;
  const int levels = static_cast<int>(partitions.size());
  std::vector<std::vector<int>> layer_nodes(static_cast<size_t>(levels) + 1);

  // create from the top down so parents exist before children
  const int root = g.add_node(kRootId, levels + 1, -1);
  for (int l = levels - 1; l >= 0; --l) {
    const auto& part = partitions[static_cast<size_t>(l)];
    size_t k = 0;
    for (size_t c : part) k = std::max(k, c + 1);
    auto& nodes = layer_nodes[static_cast<size_t>(l) + 1];
    nodes.resize(k);
    for (size_t c = 0; c < k; ++c) {
      int parent;
      if (l == levels - 1) {
        parent = root;
      } else {
        parent = layer_nodes[static_cast<size_t>(l) + 2][partitions[static_cast<size_t>(l) + 1][c]];
      }
      nodes[c] = g.add_node(cluster_id(l + 1, c), l + 1, parent);
    }
  }
  for (size_t i = 0; i < relations.size(); ++i) {
    const int parent = levels == 0 ? root : layer_nodes[1][partitions[0][i]];
    g.add_node(relations[i], 0, parent);
  }
  g.finalize();
  return g;
}

}  // namespace

RelationVocab RelationVocab::from_names(const std::vector<std::string>& names) {
  RelationVocab v;
  for (const auto& n : names) {
    require_data(!n.empty(), "empty relation name");
    for (const auto& seen : v.names) {
      require_data(seen != n, "duplicate relation '" + n + "'");
    }
    if (n == kNaRelation) {
      require_data(!v.na_index, "NA flagged more than once");
      v.na_index = v.names.size();
    }
    v.names.push_back(n);
  }
  v.train_counts.assign(v.names.size(), 0);
  return v;
}

size_t RelationVocab::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw_data("unknown relation '" + name + "'");
}

std::vector<std::string> RelationVocab::non_na_names() const {
  std::vector<std::string> out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (!is_na(i)) out.push_back(names[i]);
  }
  return out;
}

int HierarchyGraph::add_node(const std::string& id, int layer, int parent) {
  require_data(!index_.count(id), "duplicate hierarchy node '" + id + "'");
  require_data(parent == -1 || static_cast<size_t>(parent) < nodes_.size(),
               "hierarchy parent must be created before its children");
  nodes_.push_back({id, layer, parent});
  index_[id] = static_cast<int>(nodes_.size()) - 1;
  if (parent == -1) {
    require_data(root_ == -1, "hierarchy has more than one root");
    root_ = static_cast<int>(nodes_.size()) - 1;
  }
  return static_cast<int>(nodes_.size()) - 1;
}

void HierarchyGraph::finalize() {
  require_data(root_ != -1, "hierarchy has no root");
  const int top = nodes_[static_cast<size_t>(root_)].layer;
  children_.assign(nodes_.size(), {});
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (static_cast<int>(i) == root_) {
      require_data(n.layer == top, "root layer mismatch");
      continue;
    }
    require_data(n.parent != -1, "non-root node '" + n.id + "' lacks a parent");
    const auto& p = nodes_[static_cast<size_t>(n.parent)];
    require_data(p.layer == n.layer + 1,
                 "node '" + n.id + "' at layer " + std::to_string(n.layer) +
                     " has parent at layer " + std::to_string(p.layer));
    children_[static_cast<size_t>(n.parent)].push_back(static_cast<int>(i));
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    require_data(n.layer <= top, "node above the root layer");
    require_data(n.layer == top ? static_cast<int>(i) == root_ : true,
                 "node '" + n.id + "' shares the root layer");
    if (n.layer > 0) {
      require_data(!children_[i].empty(),
                   "internal node '" + n.id + "' has no children");
    } else {
      require_data(children_[i].empty(), "layer-0 node '" + n.id + "' has children");
    }
  }
}

std::optional<int> HierarchyGraph::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> HierarchyGraph::chain(const std::string& relation) const {
  auto idx = find(relation);
  if (!idx || nodes_[static_cast<size_t>(*idx)].layer != 0) {
    throw_data("relation '" + relation + "' is not a layer-0 hierarchy node");
  }
  std::vector<int> out;
  int cur = *idx;
  while (cur != root_) {
    out.push_back(cur);
    cur = nodes_[static_cast<size_t>(cur)].parent;
  }
  return out;
}

void HierarchyGraph::set_vectors(std::vector<std::vector<double>> vectors) {
  require_data(vectors.size() == nodes_.size(), "one vector per hierarchy node required");
  vectors_ = std::move(vectors);
}

HierarchyGraph HierarchyGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open hierarchy file " + path);
  struct Row {
    std::string id, parent;
    int layer;
  };
  std::vector<Row> rows;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, layer_s, parent;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, layer_s, '\t') ||
        !std::getline(ls, parent, '\t') || id.empty() || parent.empty()) {
      throw_data(path + ":" + std::to_string(line_no) + ": expected `<id>\\t<layer>\\t<parent>`");
    }
    int layer = 0;
    try {
      layer = std::stoi(layer_s);
    } catch (const std::exception&) {
      throw_data(path + ":" + std::to_string(line_no) + ": bad layer '" + layer_s + "'");
    }
    rows.push_back({id, parent, layer});
  }
  // parents may be listed after children; insert by descending layer
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.layer > b.layer; });
  HierarchyGraph g;
  for (const auto& r : rows) {
    int parent = -1;
    if (r.parent != kRootMarker) {
      auto p = g.find(r.parent);
      require_data(p.has_value(), "hierarchy parent '" + r.parent + "' of '" + r.id +
                                      "' missing or below its child");
      parent = *p;
    }
    g.add_node(r.id, r.layer, parent);
  }
  g.finalize();
  return g;
}

void HierarchyGraph::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw_data("cannot write hierarchy file " + path);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    out << n.id << '\t' << n.layer << '\t'
        << (n.parent == -1 ? std::string(kRootMarker)
                           : nodes_[static_cast<size_t>(n.parent)].id)
        << '\n';
  }
}

HierarchyGraph parse_predefined(const RelationVocab& vocab) {
  const auto relations = vocab.non_na_names();
  require_data(!relations.empty(), "no relations to build a hierarchy from");
  std::vector<std::vector<std::string>> parts;
  size_t depth = 0;
  for (const auto& r : relations) {
    parts.push_back(split_relation_path(r));
    depth = std::max(depth, parts.back().size());
  }
  const int top = static_cast<int>(depth);

  // prefix nodes are identified by (name, layer); bare ids when unique
  std::map<std::pair<std::string, int>, int> keys;  // ordered for determinism
  std::map<std::string, int> name_uses;
  for (size_t i = 0; i < relations.size(); ++i) {
    name_uses[relations[i]]++;  // layer-0 occupants
    for (int l = 1; l < top; ++l) {
      const size_t m = parts[i].size();
      const size_t count = m > static_cast<size_t>(l) ? m - static_cast<size_t>(l) : 1;
      const auto key = std::make_pair(join_prefix(relations[i], parts[i], count), l);
      if (!keys.count(key)) {
        keys[key] = 1;
        name_uses[key.first]++;
      }
    }
  }

  HierarchyGraph g;
  const int root = g.add_node(kRootId, top, -1);
  std::map<std::pair<std::string, int>, int> created;
  // top-down over layers so parents exist first
  for (int l = top - 1; l >= 1; --l) {
    for (size_t i = 0; i < relations.size(); ++i) {
      const size_t m = parts[i].size();
      const size_t count = m > static_cast<size_t>(l) ? m - static_cast<size_t>(l) : 1;
      const std::string prefix = join_prefix(relations[i], parts[i], count);
      const auto key = std::make_pair(prefix, l);
      if (created.count(key)) continue;
      int parent = root;
      if (l < top - 1) {
        const size_t pcount = m > static_cast<size_t>(l) + 1 ? m - static_cast<size_t>(l) - 1 : 1;
        parent = created.at({join_prefix(relations[i], parts[i], pcount), l + 1});
      }
      const std::string id = name_uses[prefix] > 1 ? prefix + "@" + std::to_string(l) : prefix;
      created[key] = g.add_node(id, l, parent);
    }
  }
  for (size_t i = 0; i < relations.size(); ++i) {
    int parent = root;
    if (top > 1) {
      const size_t m = parts[i].size();
      const size_t count = m > 1 ? m - 1 : 1;
      parent = created.at({join_prefix(relations[i], parts[i], count), 1});
    }
    g.add_node(relations[i], 0, parent);
  }
  g.finalize();
  return g;
}

namespace {

double partition_sse(const std::vector<std::vector<double>>& points,
                     const std::vector<size_t>& assign, size_t k) {
  const size_t dim = points[0].size();
  std::vector<std::vector<double>> mean(k, std::vector<double>(dim, 0.0));
  std::vector<size_t> count(k, 0);
  for (size_t i = 0; i < points.size(); ++i) {
    count[assign[i]]++;
    for (size_t j = 0; j < dim; ++j) mean[assign[i]][j] += points[i][j];
  }
  for (size_t c = 0; c < k; ++c) {
    for (double& v : mean[c]) v /= static_cast<double>(count[c]);
  }
  double sse = 0.0;
  for (size_t i = 0; i < points.size(); ++i) sse += sq_dist(points[i], mean[assign[i]]);
  return sse;
}

double stirling2(size_t n, size_t k) {
  std::vector<std::vector<double>> s(n + 1, std::vector<double>(k + 1, 0.0));
  s[0][0] = 1.0;
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= std::min(i, k); ++j) {
      s[i][j] = static_cast<double>(j) * s[i - 1][j] + s[i - 1][j - 1];
    }
  }
  return s[n][k];
}

// exhaustive minimum-SSE search over restricted-growth strings
void exact_kmeans_rec(const std::vector<std::vector<double>>& points, size_t k,
                      std::vector<size_t>& cur, size_t used, KMeansResult& best) {
  const size_t n = points.size();
  if (cur.size() == n) {
    if (used != k) return;
    const double sse = partition_sse(points, cur, k);
    if (sse < best.sse) {
      best.sse = sse;
      best.assignment = cur;
      best.k = k;
    }
    return;
  }
  if (used + (n - cur.size()) < k) return;  // cannot reach k clusters any more
  for (size_t c = 0; c <= std::min(used, k - 1); ++c) {
    cur.push_back(c);
    exact_kmeans_rec(points, k, cur, c == used ? used + 1 : used, best);
    cur.pop_back();
  }
}

}  // namespace

KMeansResult kmeans_cluster(const std::vector<std::vector<double>>& points, size_t k,
                            uint64_t seed, size_t restarts, size_t max_iters) {
  const size_t n = points.size();
  require_data(k >= 1 && k <= n,
               "kmeans: k=" + std::to_string(k) + " infeasible for " + std::to_string(n) +
                   " points");
  Rng rng(seed);
  KMeansResult best;
  best.sse = std::numeric_limits<double>::infinity();

  // Desk-scale instances get the exact optimum by enumeration; Lloyd below is
  // a heuristic and can sit in a local minimum even with many restarts.
  if (stirling2(n, k) <= 500000.0) {
    std::vector<size_t> cur;
    exact_kmeans_rec(points, k, cur, 0, best);
    best.assignment = canonicalize_assignment(best.assignment, k);
    return best;
  }

  for (size_t restart = 0; restart < restarts; ++restart) {
    // k-means++ seeding: next center drawn proportional to the squared
    // distance from the chosen ones, so restarts explore distinct starts
    std::vector<std::vector<double>> centers{points[rng.uniform_int(n)]};
    std::vector<double> nearest(n);
    while (centers.size() < k) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) {
        nearest[i] = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) nearest[i] = std::min(nearest[i], sq_dist(points[i], c));
        total += nearest[i];
      }
      size_t pick = 0;
      if (total > 0.0) {
        const double u = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (size_t i = 0; i < n; ++i) {
          acc += nearest[i];
          if (u < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.uniform_int(n);  // all points coincide with a center
      }
      centers.push_back(points[pick]);
    }

    std::vector<size_t> assign(n, 0), prev;
    for (size_t iter = 0; iter < max_iters; ++iter) {
      for (size_t i = 0; i < n; ++i) {
        size_t a = 0;
        double a_dist = sq_dist(points[i], centers[0]);
        for (size_t c = 1; c < k; ++c) {
          const double d = sq_dist(points[i], centers[c]);
          if (d < a_dist) {  // ties keep the lowest center index
            a_dist = d;
            a = c;
          }
        }
        assign[i] = a;
      }
      // an emptied cluster steals the point farthest from its own center
      for (size_t c = 0; c < k; ++c) {
        if (std::count(assign.begin(), assign.end(), c) > 0) continue;
        size_t steal = 0;
        double steal_dist = -1.0;
        for (size_t i = 0; i < n; ++i) {
          const double d = sq_dist(points[i], centers[assign[i]]);
          if (d > steal_dist) {
            steal_dist = d;
            steal = i;
          }
        }
        assign[steal] = c;
        centers[c] = points[steal];
      }
      if (assign == prev) break;
      prev = assign;
      for (size_t c = 0; c < k; ++c) {
        std::vector<double> mean(points[0].size(), 0.0);
        size_t count = 0;
        for (size_t i = 0; i < n; ++i) {
          if (assign[i] != c) continue;
          ++count;
          for (size_t j = 0; j < mean.size(); ++j) mean[j] += points[i][j];
        }
        for (double& v : mean) v /= static_cast<double>(count);
        centers[c] = std::move(mean);
      }
    }

    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) sse += sq_dist(points[i], centers[assign[i]]);
    if (sse < best.sse) {
      best.sse = sse;
      best.assignment = canonicalize_assignment(assign, k);
      best.k = k;
    }
  }
  return best;
}

HierarchyGraph build_kmeans(const std::vector<std::string>& relations,
                            const Embeddings& embeddings, size_t layers,
                            const std::vector<size_t>& k_per_layer, uint64_t seed) {
  require_data(layers >= 2, "build_kmeans: need at least two layers");
  require_data(k_per_layer.size() == layers - 2,
               "build_kmeans: expected " + std::to_string(layers - 2) + " cluster counts");
  std::vector<std::vector<double>> points;
  for (const auto& r : relations) {
    require_data(embeddings.has(r), "build_kmeans: no embedding for relation '" + r + "'");
    points.push_back(embeddings.at(r));
  }

  std::vector<std::vector<size_t>> partitions;
  for (size_t level = 0; level + 2 < layers; ++level) {
    auto res = kmeans_cluster(points, k_per_layer[level], seed + level);
    partitions.push_back(res.assignment);
    // centroids of this level become the points of the next
    std::vector<std::vector<double>> centroids(res.k,
                                               std::vector<double>(points[0].size(), 0.0));
    std::vector<size_t> counts(res.k, 0);
    for (size_t i = 0; i < points.size(); ++i) {
      counts[res.assignment[i]]++;
      for (size_t j = 0; j < points[i].size(); ++j) {
        centroids[res.assignment[i]][j] += points[i][j];
      }
    }
    for (size_t c = 0; c < res.k; ++c) {
      for (double& v : centroids[c]) v /= static_cast<double>(counts[c]);
    }
    points = std::move(centroids);
  }
  return assemble_clustered(relations, partitions);
}

std::vector<HcMerge> complete_linkage_merges(const std::vector<std::vector<double>>& points) {
  require_data(points.size() >= 2, "complete linkage needs at least two points");
  const size_t n = points.size();
  std::vector<std::vector<size_t>> members;  // cluster id -> point indices
  std::vector<bool> active;
  for (size_t i = 0; i < n; ++i) {
    members.push_back({i});
    active.push_back(true);
  }
  auto linkage = [&](size_t a, size_t b) {
    double worst = 0.0;
    for (size_t i : members[a]) {
      for (size_t j : members[b]) worst = std::max(worst, sq_dist(points[i], points[j]));
    }
    return std::sqrt(worst);
  };
  std::vector<HcMerge> merges;
  std::vector<size_t> alive;
  for (size_t i = 0; i < n; ++i) alive.push_back(i);
  while (alive.size() > 1) {
    size_t best_a = 0, best_b = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t x = 0; x < alive.size(); ++x) {
      for (size_t y = x + 1; y < alive.size(); ++y) {
        const double d = linkage(alive[x], alive[y]);
        if (d < best_d) {  // ties keep the lexicographically first pair
          best_d = d;
          best_a = alive[x];
          best_b = alive[y];
        }
      }
    }
    merges.push_back({best_a, best_b, best_d});
    std::vector<size_t> merged = members[best_a];
    merged.insert(merged.end(), members[best_b].begin(), members[best_b].end());
    members.push_back(std::move(merged));
    active[best_a] = active[best_b] = false;
    active.push_back(true);
    std::vector<size_t> next;
    for (size_t id : alive) {
      if (id != best_a && id != best_b) next.push_back(id);
    }
    next.push_back(members.size() - 1);
    alive = std::move(next);
  }
  return merges;
}

namespace {

// Partition of the points after the first `cut` merges, clusters numbered by
// first point occurrence.
std::vector<size_t> partition_after(const std::vector<HcMerge>& merges, size_t n, size_t cut) {
  std::vector<size_t> cluster_of(n);
  for (size_t i = 0; i < n; ++i) cluster_of[i] = i;
  std::vector<std::vector<size_t>> members(n);
  for (size_t i = 0; i < n; ++i) members[i] = {i};
  for (size_t m = 0; m < cut; ++m) {
    const auto& mg = merges[m];
    std::vector<size_t> merged = members[mg.left];
    merged.insert(merged.end(), members[mg.right].begin(), members[mg.right].end());
    members.push_back(merged);
    for (size_t p : merged) cluster_of[p] = members.size() - 1;
  }
  // renumber densely
  std::unordered_map<size_t, size_t> remap;
  std::vector<size_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    auto it = remap.find(cluster_of[i]);
    if (it == remap.end()) it = remap.emplace(cluster_of[i], remap.size()).first;
    out[i] = it->second;
  }
  return out;
}

}  // namespace

HierarchyGraph build_agglomerative(const std::vector<std::string>& relations,
                                   const Embeddings& embeddings, size_t layers) {
  require_data(layers >= 2, "build_agglomerative: need at least two layers");
  require_data(relations.size() >= layers,
               "build_agglomerative: fewer relations than requested levels");
  std::vector<std::vector<double>> points;
  for (const auto& r : relations) {
    require_data(embeddings.has(r), "build_agglomerative: no embedding for relation '" + r + "'");
    points.push_back(embeddings.at(r));
  }
  const auto merges = complete_linkage_merges(points);
  const size_t cuts_needed = layers - 2;

  // The largest relative gaps between consecutive merge distances pick the
  // cuts. Absolute gaps would always cut at the dendrogram top, because
  // complete-linkage distances between merged superclusters keep growing
  // even when the underlying blobs are already separated.
  double d_max = 0.0;
  for (const auto& m : merges) d_max = std::max(d_max, m.distance);
  const double eps = d_max > 0.0 ? 1e-12 * d_max : 1e-12;
  std::vector<std::pair<double, size_t>> gaps;  // (-relative gap, position)
  for (size_t i = 0; i + 1 < merges.size(); ++i) {
    const double ratio = (merges[i + 1].distance + eps) / (merges[i].distance + eps);
    gaps.emplace_back(-ratio, i + 1);
  }
  require_data(gaps.size() >= cuts_needed, "build_agglomerative: not enough merge gaps to cut");
  std::stable_sort(gaps.begin(), gaps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<size_t> cut_positions;
  for (size_t i = 0; i < cuts_needed; ++i) cut_positions.push_back(gaps[i].second);
  std::sort(cut_positions.begin(), cut_positions.end());

  std::vector<std::vector<size_t>> partitions;
  std::vector<size_t> prev_partition;
  for (size_t level = 0; level < cuts_needed; ++level) {
    auto part = partition_after(merges, points.size(), cut_positions[level]);
    if (level == 0) {
      partitions.push_back(part);
    } else {
      // express this level's clusters in terms of the previous level's
      size_t prev_k = 0;
      for (size_t c : prev_partition) prev_k = std::max(prev_k, c + 1);
      std::vector<size_t> over_prev(prev_k);
      for (size_t i = 0; i < part.size(); ++i) over_prev[prev_partition[i]] = part[i];
      partitions.push_back(canonicalize_assignment(over_prev, prev_k));
    }
    prev_partition = std::move(part);
  }
  return assemble_clustered(relations, partitions);
}

std::optional<double> pca_confidence(const TripleStore& store, size_t r1, size_t r2) {
  std::set<std::pair<size_t, size_t>> r1_pairs;
  std::set<size_t> r2_heads;
  std::set<std::pair<size_t, size_t>> r2_pairs;
  for (const auto& f : store.facts()) {
    if (f.relation == r1) r1_pairs.insert({f.head, f.tail});
    if (f.relation == r2) {
      r2_heads.insert(f.head);
      r2_pairs.insert({f.head, f.tail});
    }
  }
  size_t support = 0, denom = 0;
  for (const auto& p : r1_pairs) {
    if (r2_pairs.count(p)) ++support;
    if (r2_heads.count(p.first)) ++denom;  // head has some r2 value
  }
  if (denom == 0) return std::nullopt;
  return static_cast<double>(support) / static_cast<double>(denom);
}

HierarchyGraph build_amie(const TripleStore& store, double threshold) {
  require_data(store.fact_count() > 0, "build_amie: empty triple store");
  require_data(threshold > 0.0 && threshold <= 1.0, "build_amie: threshold must be in (0,1]");
  const size_t nr = store.relation_count();

  // undirected correlation graph; reaching the threshold in either direction
  // links the pair (the boundary case must group, hence >=)
  std::vector<std::vector<size_t>> adj(nr);
  for (size_t a = 0; a < nr; ++a) {
    for (size_t b = a + 1; b < nr; ++b) {
      const auto ab = pca_confidence(store, a, b);
      const auto ba = pca_confidence(store, b, a);
      if ((ab && *ab >= threshold) || (ba && *ba >= threshold)) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
    }
  }
  std::vector<size_t> component(nr, static_cast<size_t>(-1));
  size_t next = 0;
  for (size_t r = 0; r < nr; ++r) {
    if (component[r] != static_cast<size_t>(-1)) continue;
    std::vector<size_t> stack{r};
    component[r] = next;
    while (!stack.empty()) {
      const size_t cur = stack.back();
      stack.pop_back();
      for (size_t nb : adj[cur]) {
        if (component[nb] == static_cast<size_t>(-1)) {
          component[nb] = next;
          stack.push_back(nb);
        }
      }
    }
    ++next;
  }
  std::vector<std::string> relations;
  for (size_t r = 0; r < nr; ++r) relations.push_back(store.relation_name(r));
  return assemble_clustered(relations, {component});
}

void init_node_vectors(HierarchyGraph& graph, const Embeddings& relation_embeddings) {
  std::vector<std::vector<double>> vectors(graph.node_count());
  // layer order guarantees children are ready before their parents
  std::vector<int> order(graph.node_count());
  for (size_t i = 0; i < graph.node_count(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return graph.node(a).layer < graph.node(b).layer;
  });
  for (int idx : order) {
    const auto& n = graph.node(idx);
    if (n.layer == 0) {
      require_data(relation_embeddings.has(n.id),
                   "init_node_vectors: no embedding for relation '" + n.id + "'");
      vectors[static_cast<size_t>(idx)] = relation_embeddings.at(n.id);
      continue;
    }
    const auto& kids = graph.children(idx);
    std::vector<double> mean(vectors[static_cast<size_t>(kids[0])].size(), 0.0);
    for (int c : kids) {
      const auto& cv = vectors[static_cast<size_t>(c)];
      for (size_t j = 0; j < mean.size(); ++j) mean[j] += cv[j];
    }
    for (double& v : mean) v /= static_cast<double>(kids.size());
    vectors[static_cast<size_t>(idx)] = std::move(mean);
  }
  graph.set_vectors(std::move(vectors));
}

}  // namespace relex
