#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fraudgnn/features.hpp"
#include "fraudgnn/graph.hpp"

namespace fraudgnn {

namespace io_detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Whitespace-separated tokens; tab is the documented separator.
inline std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& tok, const std::string& path,
                                std::size_t line_no) {
  std::uint64_t v = 0;
  if (tok.empty()) throw ValidationError(path + ":" + std::to_string(line_no) + ": empty field");
  for (char c : tok) {
    if (c < '0' || c > '9')
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected integer, got '" +
                            tok + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

inline double parse_double(const std::string& tok, const std::string& path, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == nullptr || *end != '\0')
    throw ValidationError(path + ":" + std::to_string(line_no) + ": expected number, got '" +
                          tok + "'");
  return v;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline bool skippable(const std::string& line) {
  for (char c : line)
    if (c != ' ' && c != '\t' && c != '\r') return c == '#';
  return true;  // blank
}

}  // namespace io_detail

// Node type file: one "node_id<TAB>type_name" per line. Ids must be dense in
// [0, n); type ids follow first appearance order, which also fixes the edge
// feature dimension order of the transformation.
struct NodeTypeTable {
  std::vector<TypeId> node_types;
  std::vector<std::string> type_names;
};

inline NodeTypeTable load_node_types(const std::string& path) {
  auto in = io_detail::open_input(path);
  NodeTypeTable table;
  std::unordered_map<std::string, TypeId> type_ids;
  std::vector<std::pair<NodeId, TypeId>> rows;
  std::string line;
  std::size_t line_no = 0;
  NodeId max_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::skippable(line)) continue;
    const auto toks = io_detail::tokens(line);
    if (toks.size() != 2)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'node_id<TAB>type_name'");
    const NodeId id = static_cast<NodeId>(io_detail::parse_uint(toks[0], path, line_no));
    auto [it, inserted] = type_ids.try_emplace(toks[1], static_cast<TypeId>(table.type_names.size()));
    if (inserted) table.type_names.push_back(toks[1]);
    rows.emplace_back(id, it->second);
    max_id = std::max(max_id, id);
  }
  require(!rows.empty(), ErrorCategory::Validation, path + ": no node types");
  table.node_types.assign(static_cast<std::size_t>(max_id) + 1, static_cast<TypeId>(-1));
  for (auto [id, t] : rows) {
    require(table.node_types[id] == static_cast<TypeId>(-1), ErrorCategory::Validation,
            path + ": duplicate node id " + std::to_string(id));
    table.node_types[id] = t;
  }
  for (std::size_t i = 0; i < table.node_types.size(); ++i)
    require(table.node_types[i] != static_cast<TypeId>(-1), ErrorCategory::Validation,
            path + ": node ids not dense, missing " + std::to_string(i));
  return table;
}

// Edge list: "src_id<TAB>dst_id[<TAB>relation_id]". Either every line carries
// an explicit relation id or none does; without one, the relation defaults to
// the non-target endpoint's entity type (in edge-feature dimension order).
inline MultiEntityGraph load_multi_entity_graph(const std::string& edge_path,
                                                const std::string& node_type_path,
                                                const std::string& target_type_name) {
  NodeTypeTable table = load_node_types(node_type_path);
  TypeId target_type = static_cast<TypeId>(-1);
  for (std::size_t i = 0; i < table.type_names.size(); ++i)
    if (table.type_names[i] == target_type_name) target_type = static_cast<TypeId>(i);
  require(target_type != static_cast<TypeId>(-1), ErrorCategory::Validation,
          node_type_path + ": target type '" + target_type_name + "' not present");

  std::vector<TypeId> type_dim(table.type_names.size(), 0);
  TypeId dim_count = 0;
  for (TypeId t = 0; t < table.type_names.size(); ++t)
    if (t != target_type) type_dim[t] = dim_count++;

  auto in = io_detail::open_input(edge_path);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<TypeId> relations;
  std::string line;
  std::size_t line_no = 0;
  int explicit_rel = -1;  // -1 unknown, 0 derived, 1 explicit
  TypeId max_rel = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::skippable(line)) continue;
    const auto toks = io_detail::tokens(line);
    if (toks.size() != 2 && toks.size() != 3)
      throw ValidationError(edge_path + ":" + std::to_string(line_no) +
                            ": expected 'src_id<TAB>dst_id[<TAB>relation_id]'");
    const bool has_rel = toks.size() == 3;
    if (explicit_rel == -1) explicit_rel = has_rel ? 1 : 0;
    require(explicit_rel == (has_rel ? 1 : 0), ErrorCategory::Validation,
            edge_path + ":" + std::to_string(line_no) +
                ": mixed explicit and implicit relation ids");
    const NodeId u = static_cast<NodeId>(io_detail::parse_uint(toks[0], edge_path, line_no));
    const NodeId v = static_cast<NodeId>(io_detail::parse_uint(toks[1], edge_path, line_no));
    require(u < table.node_types.size() && v < table.node_types.size(),
            ErrorCategory::Validation,
            edge_path + ":" + std::to_string(line_no) + ": node id out of range");
    TypeId rel;
    if (has_rel) {
      rel = static_cast<TypeId>(io_detail::parse_uint(toks[2], edge_path, line_no));
    } else {
      const TypeId tu = table.node_types[u], tv = table.node_types[v];
      require((tu == target_type) != (tv == target_type), ErrorCategory::Validation,
              edge_path + ":" + std::to_string(line_no) + ": edge (" + std::to_string(u) + "," +
                  std::to_string(v) + ") is not target/non-target bipartite");
      rel = type_dim[tu == target_type ? tv : tu];
    }
    max_rel = std::max(max_rel, rel);
    edges.emplace_back(u, v);
    relations.push_back(rel);
  }
  const TypeId relation_count =
      explicit_rel == 1 ? static_cast<TypeId>(max_rel + 1) : dim_count;
  return MultiEntityGraph(std::move(table.node_types), std::move(table.type_names), target_type,
                          std::move(edges), std::move(relations),
                          std::max<TypeId>(relation_count, 1));
}

// Writes a multi-entity graph back out as an edge list + node type file, the
// same formats load_multi_entity_graph reads (relation ids explicit).
inline void save_multi_entity_graph(const std::string& edge_path,
                                    const std::string& node_type_path,
                                    const MultiEntityGraph& g) {
  {
    auto out = io_detail::open_output(node_type_path);
    for (NodeId u = 0; u < g.node_count(); ++u)
      out << u << '\t' << g.type_names()[g.node_type(u)] << '\n';
    require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + node_type_path);
  }
  auto out = io_detail::open_output(edge_path);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const auto nb = g.adjacency().neighbors_of(u);
    const auto slots = g.adjacency().edge_slots_of(u);
    for (std::size_t i = 0; i < nb.size(); ++i)
      if (u < nb[i]) out << u << '\t' << nb[i] << '\t' << g.edge_relation(slots[i]) << '\n';
  }
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + edge_path);
}

// Label file: "node_id<TAB>{0|1}".
inline LabeledSet load_labels(const std::string& path, std::size_t node_count) {
  auto in = io_detail::open_input(path);
  std::vector<std::pair<NodeId, std::uint8_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (io_detail::skippable(line)) continue;
    const auto toks = io_detail::tokens(line);
    if (toks.size() != 2)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'node_id<TAB>{0|1}'");
    const NodeId id = static_cast<NodeId>(io_detail::parse_uint(toks[0], path, line_no));
    const std::uint64_t y = io_detail::parse_uint(toks[1], path, line_no);
    require(y <= 1, ErrorCategory::Validation,
            path + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    entries.emplace_back(id, static_cast<std::uint8_t>(y));
  }
  return LabeledSet(std::move(entries), node_count);
}

inline void save_labels(const std::string& path, const LabeledSet& labels,
                        const std::string& config_hash = "") {
  auto out = io_detail::open_output(path);
  if (!config_hash.empty()) out << "# config_hash " << config_hash << '\n';
  for (const auto& [id, y] : labels.entries())
    out << id << '\t' << static_cast<int>(y) << '\n';
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

// --- single-entity graph serialization (text, v1) ---
//
//   fraudgnn-single-entity v1
//   config_hash <hex>
//   nodes <n>
//   types <d> <name_0> ... <name_{d-1}>
//   original_ids <id_0> ... <id_{n-1}>        (optional)
//   counts {0|1}
//   edges <m>
//   <u> <v> <bitstring> [count_0 ... count_{d-1}]
//
// The bitstring's character t corresponds to edge-feature dimension t.

inline void save_single_entity_graph(const std::string& path, const SingleEntityGraph& g,
                                     const std::string& config_hash) {
  auto out = io_detail::open_output(path);
  out << "fraudgnn-single-entity v1\n";
  out << "config_hash " << config_hash << '\n';
  out << "nodes " << g.node_count() << '\n';
  out << "types " << g.edge_feature_dim();
  for (const auto& name : g.feature_type_names()) out << ' ' << name;
  out << '\n';
  if (!g.original_ids().empty()) {
    out << "original_ids";
    for (NodeId id : g.original_ids()) out << ' ' << id;
    out << '\n';
  }
  out << "counts " << (g.has_counts() ? 1 : 0) << '\n';
  out << "edges " << g.edge_count() << '\n';
  const std::size_t d = g.edge_feature_dim();
  for (std::uint32_t e = 0; e < g.edge_count(); ++e) {
    const auto [u, v] = g.edges()[e];
    out << u << ' ' << v << ' ';
    const std::uint64_t bits = g.edge_feature_bits(e);
    for (std::size_t t = 0; t < d; ++t) out << (((bits >> t) & 1) ? '1' : '0');
    if (g.has_counts())
      for (std::uint32_t c : g.edge_shared_counts(e)) out << ' ' << c;
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

inline SingleEntityGraph load_single_entity_graph(const std::string& path) {
  auto in = io_detail::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  auto next_tokens = [&](const char* what) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!io_detail::skippable(line)) return io_detail::tokens(line);
    }
    throw ValidationError(path + ": unexpected end of file, expected " + std::string(what));
  };
  auto head = next_tokens("header");
  require(head.size() == 2 && head[0] == "fraudgnn-single-entity" && head[1] == "v1",
          ErrorCategory::Validation, path + ": bad header");
  auto hash_line = next_tokens("config_hash");
  require(hash_line.size() == 2 && hash_line[0] == "config_hash", ErrorCategory::Validation,
          path + ": missing config_hash");
  auto nodes_line = next_tokens("nodes");
  require(nodes_line.size() == 2 && nodes_line[0] == "nodes", ErrorCategory::Validation,
          path + ": missing nodes");
  const std::size_t n = io_detail::parse_uint(nodes_line[1], path, line_no);
  auto types_line = next_tokens("types");
  require(types_line.size() >= 2 && types_line[0] == "types", ErrorCategory::Validation,
          path + ": missing types");
  const std::size_t d = io_detail::parse_uint(types_line[1], path, line_no);
  require(types_line.size() == 2 + d, ErrorCategory::Validation, path + ": type name count");
  std::vector<std::string> names(types_line.begin() + 2, types_line.end());

  auto maybe_ids = next_tokens("original_ids or counts");
  std::vector<NodeId> original_ids;
  if (maybe_ids[0] == "original_ids") {
    require(maybe_ids.size() == 1 + n, ErrorCategory::Validation, path + ": original id count");
    for (std::size_t i = 0; i < n; ++i)
      original_ids.push_back(static_cast<NodeId>(io_detail::parse_uint(maybe_ids[1 + i], path, line_no)));
    maybe_ids = next_tokens("counts");
  }
  require(maybe_ids.size() == 2 && maybe_ids[0] == "counts", ErrorCategory::Validation,
          path + ": missing counts flag");
  const bool has_counts = io_detail::parse_uint(maybe_ids[1], path, line_no) != 0;
  auto edges_line = next_tokens("edges");
  require(edges_line.size() == 2 && edges_line[0] == "edges", ErrorCategory::Validation,
          path + ": missing edges");
  const std::size_t m = io_detail::parse_uint(edges_line[1], path, line_no);

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::uint64_t> bits;
  std::vector<std::vector<std::uint32_t>> counts;
  edges.reserve(m);
  for (std::size_t e = 0; e < m; ++e) {
    auto toks = next_tokens("edge line");
    const std::size_t expect = has_counts ? 3 + d : 3;
    require(toks.size() == expect, ErrorCategory::Validation,
            path + ":" + std::to_string(line_no) + ": bad edge line");
    const NodeId u = static_cast<NodeId>(io_detail::parse_uint(toks[0], path, line_no));
    const NodeId v = static_cast<NodeId>(io_detail::parse_uint(toks[1], path, line_no));
    require(toks[2].size() == d, ErrorCategory::Validation,
            path + ":" + std::to_string(line_no) + ": bitstring length");
    std::uint64_t b = 0;
    for (std::size_t t = 0; t < d; ++t) {
      require(toks[2][t] == '0' || toks[2][t] == '1', ErrorCategory::Validation,
              path + ":" + std::to_string(line_no) + ": bitstring must be 0/1");
      if (toks[2][t] == '1') b |= 1ull << t;
    }
    edges.emplace_back(u, v);
    bits.push_back(b);
    if (has_counts) {
      std::vector<std::uint32_t> row(d);
      for (std::size_t t = 0; t < d; ++t)
        row[t] = static_cast<std::uint32_t>(io_detail::parse_uint(toks[3 + t], path, line_no));
      counts.push_back(std::move(row));
    }
  }
  return SingleEntityGraph(n, std::move(edges), std::move(bits), std::move(names),
                           std::move(original_ids), std::move(counts));
}

// --- feature matrix serialization (text, v1) ---

inline void save_features(const std::string& path, const FeatureMatrix& f,
                          const std::string& config_hash) {
  auto out = io_detail::open_output(path);
  out << "fraudgnn-features v1\n";
  out << "config_hash " << config_hash << '\n';
  out << "method " << f.method << (f.config_echo.empty() ? "" : " ") << f.config_echo << '\n';
  out << "shape " << f.rows() << ' ' << f.dim() << '\n';
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t c = 0; c < f.dim(); ++c) {
      if (c) out << ' ';
      out << io_detail::fmt_double(f.values(r, c));
    }
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

inline FeatureMatrix load_features(const std::string& path) {
  auto in = io_detail::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    while (std::getline(in, line)) {
      ++line_no;
      if (!io_detail::skippable(line)) return line;
    }
    throw ValidationError(path + ": truncated feature file");
  };
  auto head = io_detail::tokens(next_line());
  require(head.size() == 2 && head[0] == "fraudgnn-features" && head[1] == "v1",
          ErrorCategory::Validation, path + ": bad header");
  auto hash_line = io_detail::tokens(next_line());
  require(hash_line.size() == 2 && hash_line[0] == "config_hash", ErrorCategory::Validation,
          path + ": missing config_hash");
  auto method_line = io_detail::tokens(next_line());
  require(method_line.size() >= 2 && method_line[0] == "method", ErrorCategory::Validation,
          path + ": missing method");
  auto shape_line = io_detail::tokens(next_line());
  require(shape_line.size() == 3 && shape_line[0] == "shape", ErrorCategory::Validation,
          path + ": missing shape");
  const std::size_t rows = io_detail::parse_uint(shape_line[1], path, line_no);
  const std::size_t cols = io_detail::parse_uint(shape_line[2], path, line_no);
  FeatureMatrix f;
  f.method = method_line[1];
  for (std::size_t i = 2; i < method_line.size(); ++i)
    f.config_echo += (i > 2 ? " " : "") + method_line[i];
  f.values = Tensor(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto toks = io_detail::tokens(next_line());
    require(toks.size() == cols, ErrorCategory::Validation,
            path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                " values");
    for (std::size_t c = 0; c < cols; ++c)
      f.values(r, c) = io_detail::parse_double(toks[c], path, line_no);
  }
  require(f.values.all_finite(), ErrorCategory::Validation, path + ": non-finite feature value");
  return f;
}

// Prediction rows: "node_id<TAB>label<TAB>p_fraud".
inline void save_predictions(const std::string& path, const std::vector<NodeId>& nodes,
                             const std::vector<std::uint8_t>& labels,
                             const std::vector<double>& p_fraud,
                             const std::string& config_hash = "") {
  require(nodes.size() == labels.size() && nodes.size() == p_fraud.size(),
          ErrorCategory::Validation, "prediction arrays must align");
  auto out = io_detail::open_output(path);
  if (!config_hash.empty()) out << "# config_hash " << config_hash << '\n';
  for (std::size_t i = 0; i < nodes.size(); ++i)
    out << nodes[i] << '\t' << static_cast<int>(labels[i]) << '\t'
        << io_detail::fmt_double(p_fraud[i]) << '\n';
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

// Embedding rows: "node_id<TAB>label<TAB>e_1<TAB>...<TAB>e_dim"; label -1
// marks an unlabeled node.
inline void save_embeddings(const std::string& path, const std::vector<NodeId>& nodes,
                            const std::vector<int>& labels, const Tensor& embeddings,
                            const std::string& config_hash = "") {
  require(nodes.size() == labels.size() && nodes.size() == embeddings.rows(),
          ErrorCategory::Validation, "embedding arrays must align");
  auto out = io_detail::open_output(path);
  if (!config_hash.empty()) out << "# config_hash " << config_hash << '\n';
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out << nodes[i] << '\t' << labels[i];
    for (std::size_t c = 0; c < embeddings.cols(); ++c)
      out << '\t' << io_detail::fmt_double(embeddings(i, c));
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

}  // namespace fraudgnn
