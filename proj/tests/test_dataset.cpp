//
// Project SynKit - Copyright 2026 SynKit Contributors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "synkit/dataset.hpp"
#include "synkit/fixtures.hpp"

using namespace synkit;
using namespace synkit::dataset;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("synkit_ds_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p);
  f << content;
}

DataBundle minimal_bundle(const fs::path& dir, const std::string& triplet_rows) {
  write_file(dir / "triplets.csv", "drug_a_id,drug_b_id,cell_line_id,scheme,score\n" + triplet_rows);
  write_file(dir / "expression.csv", "cell_line_id,g0,g1\nCL01,0.5,-1.25\n");
  write_file(dir / "drugs.csv", "drug_id,smiles,target_ids\nD001,CCO,T001\nD002,c1ccccc1,\n");
  write_file(dir / "targets.csv", "target_id,t0,t1,t2\nT001,0.1,0.2,0.3\n");
  return ingest((dir / "triplets.csv").string(), (dir / "expression.csv").string(),
                (dir / "drugs.csv").string(), (dir / "targets.csv").string());
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("empty triplet file ingests to an empty table") {
  auto dir = scratch_dir("empty");
  auto bundle = minimal_bundle(dir, "");
  CHECK(bundle.samples.empty());
  CHECK(bundle.profiles.size() == 1);
  CHECK(bundle.drugs.size() == 2);
  CHECK(bundle.expression_dim == 2);
  CHECK(bundle.target_dim == 3);
}

TEST_CASE("unknown cell line raises DanglingReference naming the row") {
  auto dir = scratch_dir("dangling");
  try {
    minimal_bundle(dir, "D001,D002,CL01,bliss,12\nD001,D002,NOPE,bliss,14\n");
    FAIL("expected DanglingReference");
  } catch (const DanglingReference& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("NOPE") != std::string::npos);
  }
}

TEST_CASE("unknown drug raises DanglingReference") {
  auto dir = scratch_dir("dangling_drug");
  CHECK_THROWS_AS(minimal_bundle(dir, "D001,D999,CL01,zip,11\n"), DanglingReference);
}

TEST_CASE("schema mismatch is reported") {
  auto dir = scratch_dir("schema");
  write_file(dir / "triplets.csv", "a,b,c,d,e\n");
  write_file(dir / "expression.csv", "cell_line_id,g0\nCL01,1\n");
  write_file(dir / "drugs.csv", "drug_id,smiles,target_ids\n");
  write_file(dir / "targets.csv", "target_id,t0\n");
  CHECK_THROWS_AS(ingest((dir / "triplets.csv").string(), (dir / "expression.csv").string(),
                         (dir / "drugs.csv").string(), (dir / "targets.csv").string()),
                  SchemaError);
}

TEST_CASE("unresolvable target ids are dropped with a warning") {
  auto dir = scratch_dir("droptarget");
  write_file(dir / "triplets.csv", "drug_a_id,drug_b_id,cell_line_id,scheme,score\n");
  write_file(dir / "expression.csv", "cell_line_id,g0\nCL01,1\n");
  write_file(dir / "drugs.csv", "drug_id,smiles,target_ids\nD001,CCO,T001;TMISSING\n");
  write_file(dir / "targets.csv", "target_id,t0\nT001,0.5\n");
  auto bundle = ingest((dir / "triplets.csv").string(), (dir / "expression.csv").string(),
                       (dir / "drugs.csv").string(), (dir / "targets.csv").string());
  CHECK(bundle.drugs.at("D001").target_ids == std::vector<std::string>{"T001"});
  REQUIRE(bundle.warnings.size() == 1);
  CHECK(bundle.warnings[0].find("TMISSING") != std::string::npos);
}

TEST_CASE("shipped fixture resolves completely") {
  auto dir = scratch_dir("shipped");
  fixtures::FixtureConfig cfg;
  auto paths = fixtures::gen_fixtures(dir.string(), cfg);
  auto bundle = ingest(paths.triplets, paths.expression, paths.drugs, paths.targets);
  CHECK(bundle.samples.size() == 200);
  CHECK(bundle.drugs.size() == 24);
  CHECK(bundle.profiles.size() == 4);
  CHECK(bundle.warnings.empty());
}

TEST_CASE("gen-fixtures is byte-identical under one seed") {
  auto d1 = scratch_dir("gen1");
  auto d2 = scratch_dir("gen2");
  fixtures::FixtureConfig cfg;
  cfg.seed = 7;
  fixtures::gen_fixtures(d1.string(), cfg);
  fixtures::gen_fixtures(d2.string(), cfg);
  for (const char* name : {"triplets.csv", "expression.csv", "drugs.csv", "targets.csv", "knowledge.jsonl"}) {
    std::ifstream a(d1 / name), b(d2 / name);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(!sa.empty());
  }
}

TEST_CASE("filter_and_label boundary behaviour") {
  SampleTable t;
  for (double score : {15.0, 5.0, -10.0, 10.0, -9.999}) {
    SynergySample s;
    s.drug_a_id = "A";
    s.drug_b_id = "B";
    s.cell_line_id = "C";
    s.score = score;
    t.push_back(s);
  }
  auto kept = filter_and_label(t, 10.0);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].score == 15.0);
  CHECK(kept[0].label == SynergyLabel::synergistic);
  CHECK(kept[1].score == -10.0);
  CHECK(kept[1].label == SynergyLabel::antagonistic);
  CHECK(kept[2].score == 10.0);
  CHECK(kept[2].label == SynergyLabel::synergistic);

  auto twice = filter_and_label(kept, 10.0);
  REQUIRE(twice.size() == kept.size());
  for (std::size_t i = 0; i < twice.size(); ++i) {
    CHECK(twice[i].score == kept[i].score);
    CHECK(twice[i].label == kept[i].label);
  }
}

TEST_CASE("size split at 305 Da") {
  std::map<std::string, DrugRecord> drugs;
  drugs["LIGHT"] = {"LIGHT", "CCO", {}, {}};                  // ~46 Da
  drugs["HEAVY"] = {"HEAVY", "IC(I)CCc1ccccc1", {}, {}};      // > 305 Da
  REQUIRE(chem::molecular_weight(chem::parse_smiles("IC(I)CCc1ccccc1")) > 305.0);
  auto p = ood_split(drugs, SplitCriterion::size, 305.0);
  CHECK(p.id_drugs == std::set<std::string>{"HEAVY"});
  CHECK(p.ood_drugs == std::set<std::string>{"LIGHT"});
}

TEST_CASE("degenerate scaffold split raises EmptyPartition") {
  std::map<std::string, DrugRecord> drugs;
  for (int i = 0; i < 20; ++i) {
    std::string id = "D" + std::to_string(i);
    std::string chain(static_cast<std::size_t>(i % 4 + 1), 'C');
    drugs[id] = {id, chain + "c1ccccc1", {}, {}};  // one shared scaffold group
  }
  CHECK_THROWS_AS((void)ood_split(drugs, SplitCriterion::scaffold, 13.0), EmptyPartition);
}

TEST_CASE("scaffold split by group population") {
  std::map<std::string, DrugRecord> drugs;
  for (int i = 0; i < 15; ++i) {
    std::string id = "BZ" + std::to_string(i);
    drugs[id] = {id, std::string(static_cast<std::size_t>(i % 5 + 1), 'C') + "c1ccccc1", {}, {}};
  }
  for (int i = 0; i < 5; ++i) {
    std::string id = "PY" + std::to_string(i);
    drugs[id] = {id, std::string(static_cast<std::size_t>(i % 3 + 1), 'C') + "c1ccncc1", {}, {}};
  }
  auto p = ood_split(drugs, SplitCriterion::scaffold, 13.0);
  CHECK(p.id_drugs.size() == 15);
  CHECK(p.ood_drugs.size() == 5);
  for (const auto& id : p.id_drugs) CHECK(id.substr(0, 2) == "BZ");
  for (const auto& id : p.ood_drugs) CHECK(id.substr(0, 2) == "PY");
}

TEST_CASE("assemble_splits routes samples and honours the ratio") {
  SplitPartition p;
  p.id_drugs = {"A", "B"};
  p.ood_drugs = {"X", "Y"};
  SampleTable t;
  auto mk = [&](const std::string& a, const std::string& b) {
    SynergySample s;
    s.drug_a_id = a;
    s.drug_b_id = b;
    s.cell_line_id = "CL";
    s.score = 20.0;
    t.push_back(s);
  };
  mk("A", "B");
  mk("B", "A");
  mk("X", "B");
  mk("A", "Y");
  mk("X", "Y");
  mk("Y", "B");
  mk("A", "X");
  mk("Y", "X");

  SUBCASE("1:1 ratio splits the pool in half") {
    auto done = assemble_splits(t, p, 1, 1, 42);
    CHECK(done.train.size() == 2);
    CHECK(done.valid.size() == 3);
    CHECK(done.test.size() == 3);
    for (auto i : done.train) {
      CHECK(p.id_drugs.count(t[i].drug_a_id));
      CHECK(p.id_drugs.count(t[i].drug_b_id));
    }
    for (const auto& idxs : {done.valid, done.test})
      for (auto i : idxs)
        CHECK((p.ood_drugs.count(t[i].drug_a_id) || p.ood_drugs.count(t[i].drug_b_id)));
  }

  SUBCASE("same seed, same assignment") {
    auto r1 = assemble_splits(t, p, 1, 1, 9);
    auto r2 = assemble_splits(t, p, 1, 1, 9);
    CHECK(r1.valid == r2.valid);
    CHECK(r1.test == r2.test);
  }

  SUBCASE("no O.O.D. samples is an error") {
    SampleTable only_id;
    only_id.push_back(t[0]);
    CHECK_THROWS_AS((void)assemble_splits(only_id, p, 1, 1, 42), NoOodSamples);
  }
}

TEST_CASE("split sizes account for every covered sample") {
  auto dir = scratch_dir("sizes");
  auto paths = fixtures::gen_fixtures(dir.string(), {});
  auto bundle = ingest(paths.triplets, paths.expression, paths.drugs, paths.targets);
  auto filtered = filter_and_label(bundle.samples, 10.0);
  auto part = assemble_splits(filtered, ood_split(bundle.drugs, SplitCriterion::size, 305.0), 1, 1, 42);
  CHECK(part.train.size() + part.valid.size() + part.test.size() == filtered.size());
  for (auto i : part.train) {
    CHECK(part.ood_drugs.count(filtered[i].drug_a_id) == 0);
    CHECK(part.ood_drugs.count(filtered[i].drug_b_id) == 0);
  }
}

TEST_CASE("split report renders the statistics row") {
  auto s = split_report_counts(SplitCriterion::scaffold, 13.0, 1364, 424, 84766, 20391, 20391);
  CHECK(s == "criterion,theta,id_drugs,ood_drugs,train,valid,test\nscaffold,13,1364,424,84766,20391,20391\n");

  SplitPartition p;
  p.criterion = SplitCriterion::size;
  p.theta = 305.0;
  p.id_drugs = {"A"};
  p.ood_drugs = {"B"};
  auto r = split_report(p);  // empty valid/test render as zeros
  CHECK(r.find("size,305,1,1,0,0,0") != std::string::npos);
}

TEST_CASE("report counts match assemble output exactly") {
  auto dir = scratch_dir("recount");
  auto paths = fixtures::gen_fixtures(dir.string(), {});
  auto bundle = ingest(paths.triplets, paths.expression, paths.drugs, paths.targets);
  auto filtered = filter_and_label(bundle.samples, 10.0);
  auto part = assemble_splits(filtered, ood_split(bundle.drugs, SplitCriterion::size, 305.0), 1, 1, 42);
  auto expect = split_report_counts(part.criterion, part.theta, part.id_drugs.size(), part.ood_drugs.size(),
                                    part.train.size(), part.valid.size(), part.test.size());
  CHECK(split_report(part) == expect);
}

}  // TEST_SUITE
