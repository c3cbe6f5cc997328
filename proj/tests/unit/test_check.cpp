#include <doctest.h>

#include <string>

#include "kst/check/history.hpp"
#include "kst/check/linearizability.hpp"
#include "kst/check/oracle.hpp"

using namespace kst;
using namespace kst::check;

namespace {

History parse(const std::string& text) {
  std::string error;
  auto h = parse_history(text, &error);
  INFO(error);
  REQUIRE(h);
  return *h;
}

}  // namespace

TEST_CASE("set oracle follows set semantics") {
  SetOracle o{{1, 2}};
  CHECK_FALSE(o.insert(1));
  CHECK(o.insert(5));
  CHECK(o.erase(2));
  CHECK_FALSE(o.erase(2));
  CHECK(o.contains(5));
  CHECK(o.range(0, 5) == std::vector<Key>{1, 5});
  CHECK(o.range(2, 4).empty());
  CHECK(o.range(5, 5) == std::vector<Key>{5});

  const auto run = oracle_apply({{OpKind::insert, 3, 0},
                                 {OpKind::insert, 3, 0},
                                 {OpKind::range, 0, 9},
                                 {OpKind::erase, 4, 0},
                                 {OpKind::find, 3, 0}});
  REQUIRE(run.results.size() == 5);
  CHECK(run.results[0].flag);
  CHECK_FALSE(run.results[1].flag);
  CHECK(run.results[2].keys == std::vector<Key>{3});
  CHECK_FALSE(run.results[3].flag);
  CHECK(run.results[4].flag);
  CHECK(run.final_keys == std::set<Key>{3});
}

TEST_CASE("history text round-trips") {
  const std::string text =
      "initial 1 2\n"
      "final 1 3\n"
      "t0 insert 3 -> true @1 4\n"
      "t1 range 0 4 -> [1,2] @2 9\n"
      "t2 delete 2 -> pending @3\n";
  const History h = parse(text);
  CHECK(h.initial == std::set<Key>{1, 2});
  REQUIRE(h.final_keys);
  CHECK(*h.final_keys == std::set<Key>{1, 3});
  REQUIRE(h.records.size() == 3);
  CHECK(h.records[1].op == Op{OpKind::range, 0, 4});
  CHECK(h.records[1].result->keys == std::vector<Key>{1, 2});
  CHECK(h.records[2].pending());
  CHECK(h.records[2].thread == 2u);
  CHECK(to_text(h) == text);
  CHECK(parse(to_text(h)) == h);
}

TEST_CASE("history parser reports the bad line") {
  std::string error;
  CHECK_FALSE(parse_history("initial 1\nt0 frobnicate 3 -> true @1 2\n", &error));
  CHECK(error.find("2") != std::string::npos);
  CHECK_FALSE(parse_history("t0 insert 3 -> maybe @1 2\n"));
  CHECK_FALSE(parse_history("t0 insert 3 -> true @5 2\n"));
}

TEST_CASE("sequential histories are linearizable") {
  const auto r = check_linearizable(parse(
      "t0 insert 1 -> true @1 2\n"
      "t0 find 1 -> true @3 4\n"
      "t0 delete 1 -> true @5 6\n"
      "t0 range 0 9 -> [] @7 8\n"));
  CHECK(r.ok());
  CHECK(r.witness == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("real-time order is enforced") {
  const auto r = check_linearizable(parse(
      "t0 insert 1 -> true @1 2\n"
      "t1 find 1 -> false @3 4\n"));
  CHECK(r.verdict == Verdict::not_linearizable);
  CHECK(r.conflict.size() == 2);

  // Overlapping, the find may go first.
  CHECK(check_linearizable(parse(
            "t0 insert 1 -> true @1 4\n"
            "t1 find 1 -> false @2 3\n"))
            .ok());
}

TEST_CASE("pending operations may take effect or not") {
  CHECK(check_linearizable(parse(
            "t0 insert 1 -> pending @1\n"
            "t1 find 1 -> true @2 3\n"))
            .ok());
  CHECK(check_linearizable(parse(
            "t0 insert 1 -> pending @1\n"
            "t1 find 1 -> false @2 3\n"))
            .ok());
  CHECK(check_linearizable(parse(
            "t0 insert 1 -> pending @1\n"
            "t1 find 1 -> true @2 3\n"
            "t1 find 1 -> false @4 5\n"))
            .verdict == Verdict::not_linearizable);
}

TEST_CASE("final contents constrain the order") {
  const auto r = check_linearizable(parse(
      "final\n"
      "t0 insert 1 -> true @1 2\n"));
  CHECK(r.verdict == Verdict::not_linearizable);
  CHECK(r.final_state_only);

  CHECK(check_linearizable(parse(
            "final 1\n"
            "t0 insert 1 -> pending @1\n"))
            .ok());
}

TEST_CASE("a range query mixing two orders of updates is rejected") {
  // 3 was inserted before 0; a result holding 0 but not 3 fits no order.
  const History h = parse(
      "initial 1 2\n"
      "t0 insert 3 -> true @2 3\n"
      "t0 insert 0 -> true @4 5\n"
      "t1 range 0 4 -> [0,1,2] @1 6\n");
  const auto r = check_linearizable(h);
  CHECK(r.verdict == Verdict::not_linearizable);
  // The query alone already contradicts the initial contents.
  CHECK(r.conflict == std::vector<std::size_t>{2});
  CHECK(!r.describe(h).empty());

  CHECK(check_linearizable(parse(
            "initial 1 2\n"
            "t0 insert 3 -> true @2 3\n"
            "t0 insert 0 -> true @4 5\n"
            "t1 range 0 4 -> [1,2,3] @1 6\n"))
            .ok());
}

TEST_CASE("a stale range after a completed delete is rejected") {
  const auto r = check_linearizable(parse(
      "initial 1 2\n"
      "t0 delete 1 -> true @1 2\n"
      "t1 range 1 2 -> [1,2] @3 4\n"));
  CHECK(r.verdict == Verdict::not_linearizable);
  CHECK_FALSE(r.final_state_only);
}

TEST_CASE("the search budget is reported instead of a verdict") {
  std::string text;
  for (int t = 0; t < 12; ++t)
    text += "t" + std::to_string(t) + " insert " + std::to_string(t) +
            " -> true @1 100\n";
  text += "t12 find 99 -> true @1 100\n";
  const auto r = check_linearizable(parse(text), 50);
  CHECK(r.verdict == Verdict::budget_exhausted);
}
