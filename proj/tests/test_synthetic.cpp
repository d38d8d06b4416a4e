#include <doctest.h>

#include "fairge/errors.hpp"
#include "fairge/spectral.hpp"
#include "fairge/synthetic.hpp"

using namespace fairge;

TEST_CASE("disjoint cliques (3,3)") {
  SyntheticSpec spec;
  spec.kind = GraphKind::disjoint_cliques;
  spec.clique_sizes = {3, 3};
  const auto d = gen_synthetic(spec);
  CHECK(d.graph.n() == 6);
  CHECK(d.graph.edge_count() == 6);
  CHECK(component_count(d.graph) == 2);
  const auto eig = dense_eigendecomposition(d.graph);
  CHECK(eig.eigenvalues[0] == doctest::Approx(2.0));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(d.block == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("Erdos-Renyi with p = 1 is complete") {
  SyntheticSpec spec;
  spec.kind = GraphKind::erdos_renyi;
  spec.n = 50;
  spec.p = 1.0;
  const auto d = gen_synthetic(spec);
  CHECK(d.graph.edge_count() == 50 * 49 / 2);
  CHECK(dense_eigendecomposition(d.graph).eigenvalues[0] == doctest::Approx(49.0));
}

TEST_CASE("generation is deterministic and seed dependent") {
  SyntheticSpec spec;
  spec.seed = 4;
  const auto a = gen_synthetic(spec);
  const auto b = gen_synthetic(spec);
  CHECK(to_edge_list(a.graph) == to_edge_list(b.graph));
  CHECK(to_attribute_csv(a.table) == to_attribute_csv(b.table));
  spec.seed = 5;
  CHECK(to_edge_list(gen_synthetic(spec).graph) != to_edge_list(a.graph));
}

TEST_CASE("table layout and sensitive rule") {
  SyntheticSpec spec;
  spec.n = 40;
  const auto d = gen_synthetic(spec);
  const auto& a = d.table.attributes;
  CHECK(a.column_names.back() == "sensitive");
  CHECK(a.sensitive_col == static_cast<int>(a.d()) - 1);
  CHECK(a.d() == 2 + 2 + 2 + 1);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(d.table.sensitive.values[i] == d.block[i] % 2);  // rho_s = 1
    CHECK(a.values(static_cast<Eigen::Index>(i), a.sensitive_col) == d.table.sensitive.values[i]);
  }
  CHECK(d.table.sensitive.missing_count() == 0);
}

TEST_CASE("custom edges and spec JSON") {
  SyntheticSpec spec;
  spec.kind = GraphKind::custom;
  spec.n = 4;
  spec.edges = {{0, 1}, {1, 2}, {2, 3}};
  spec.label_rule = LabelRule::sensitive_flip;
  CHECK(gen_synthetic(spec).graph.edge_count() == 3);
  const auto back = synthetic_spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  CHECK_THROWS_AS(synthetic_spec_from_json({{"kind", "lattice"}}), InputError);
  CHECK_THROWS_AS(synthetic_spec_from_json({{"nodes", 3}}), InputError);
  SyntheticSpec bad;
  bad.rho_s = 1.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
}
