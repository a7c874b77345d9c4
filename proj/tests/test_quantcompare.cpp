#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "labelscale/quantcompare.hpp"
#include "support/reference_tables.hpp"

namespace ls = labelscale;
using ls::QuantMetric;
using ls::QuantRecord;

namespace {

std::vector<QuantRecord> stacks(const std::string& method, const std::vector<std::array<double, 3>>& values) {
  std::vector<QuantRecord> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({"s" + std::to_string(i), method, values[i][0], values[i][1], values[i][2]});
  }
  return out;
}

double at(const ls::OptionRow& row, QuantMetric m) { return row[static_cast<std::size_t>(m)].value(); }

ls::OptionTable make_table(std::vector<std::string> nets, std::vector<std::array<double, 3>> per_network) {
  ls::OptionTable t{"t", std::move(nets), {}};
  for (const auto& v : per_network) t.rows.push_back({v[0], v[1], v[2]});
  return t;
}

double truncate1(double pct) { return std::floor(pct * 10.0 + 1e-9) / 10.0; }

}  // namespace

TEST(Option1, CountsStacksBelowThreshold) {
  std::vector<std::array<double, 3>> manual(24, {30, 20, 1});
  std::vector<std::array<double, 3>> automated(24, {30, 20, 1});
  for (std::size_t i = 0; i < 21; ++i) automated[i][0] = 10;
  for (std::size_t i = 0; i < 15; ++i) automated[i][2] = 0.2;
  const auto row = ls::option1(stacks("manual", manual), stacks("a", automated), {});
  EXPECT_EQ(at(row, QuantMetric::ScarMl), 87.5);
  EXPECT_EQ(at(row, QuantMetric::ScarPct), 0.0);
  EXPECT_EQ(at(row, QuantMetric::MoPct), 62.5);
}

TEST(Option1, AllStacksSatisfy) {
  const auto m = stacks("manual", {{1, 1, 0.1}, {2, 2, 0.2}});
  EXPECT_EQ(ls::option1(m, stacks("a", {{1, 1, 0.1}, {2, 2, 0.2}}), {}), (ls::OptionRow{100.0, 100.0, 100.0}));
}

TEST(Option1, AbsDiffMode) {
  const auto m = stacks("manual", {{100, 50, 5}, {100, 50, 5}});
  const auto a = stacks("a", {{110, 60, 5.2}, {130, 70, 6}});
  ls::OptionThresholds th;
  th.mode = ls::PredicateMode::AbsDiffBelow;
  const auto row = ls::option1(m, a, th);
  EXPECT_EQ(at(row, QuantMetric::ScarMl), 50.0);
  EXPECT_EQ(at(row, QuantMetric::ScarPct), 50.0);
  EXPECT_EQ(at(row, QuantMetric::MoPct), 50.0);
  // value-below would count nothing for the first two metrics
  EXPECT_EQ(at(ls::option1(m, a, {}), QuantMetric::ScarMl), 0.0);
}

TEST(Option1, OutputsAreMultiplesOfHundredOverN) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> v(0.0, 40.0);
  for (std::size_t n = 1; n <= 30; ++n) {
    std::vector<std::array<double, 3>> mv;
    std::vector<std::array<double, 3>> av;
    for (std::size_t i = 0; i < n; ++i) {
      mv.push_back({v(rng), v(rng), v(rng) / 40});
      av.push_back({v(rng), v(rng), v(rng) / 40});
    }
    const auto row = ls::option1(stacks("manual", mv), stacks("a", av), {});
    for (const auto& cell : row) {
      const double k = *cell * double(n) / 100.0;
      EXPECT_NEAR(k, std::round(k), 1e-9);
      const double exact = 100.0 * std::round(k) / double(n);
      EXPECT_EQ(*cell, exact);
    }
  }
}

TEST(Option1, StackMismatchIsAnError) {
  const auto m = stacks("manual", {{1, 1, 1}, {2, 2, 2}});
  EXPECT_THROW(ls::option1(m, stacks("a", {{1, 1, 1}}), {}), ls::ValidationError);
  auto renamed = stacks("a", {{1, 1, 1}, {2, 2, 2}});
  renamed[1].stack_id = "other";
  EXPECT_THROW(ls::option1(m, renamed, {}), ls::ValidationError);
  EXPECT_THROW(ls::option1(m, m, ls::OptionThresholds{0, 15, 0.35}), ls::ValidationError);
}

TEST(Option2, RatioOfSums) {
  const auto m = stacks("manual", {{10, 5, 1}, {30, 5, 1}});
  const auto a = stacks("a", {{8, 5, 0}, {21.36, 5, 0}});
  const auto row = ls::option2(m, a);
  EXPECT_NEAR(at(row, QuantMetric::ScarMl), 73.4, 1e-12);
  EXPECT_EQ(at(row, QuantMetric::ScarPct), 100.0);
  EXPECT_EQ(at(row, QuantMetric::MoPct), 0.0);
}

TEST(Option2, ZeroManualSumIsUndefined) {
  const auto row = ls::option2(stacks("manual", {{0, 1, 1}}), stacks("a", {{3, 1, 1}}));
  EXPECT_FALSE(row[0].has_value());
  EXPECT_TRUE(row[1].has_value());
}

TEST(Option3, DifferenceOfSums) {
  const auto m = stacks("manual", {{10, 20, 4}, {30, 20, 4}});
  EXPECT_EQ(ls::option3(m, m), (ls::OptionRow{100.0, 100.0, 100.0}));
  // |diff| sums: 10 of 40 (75%), 40 of 40 (0%), 16 of 8 (clamped to 0%)
  const auto a = stacks("a", {{5, 0, 12}, {25, 0, 12}});
  const auto row = ls::option3(m, a);
  EXPECT_DOUBLE_EQ(at(row, QuantMetric::ScarMl), 75.0);
  EXPECT_EQ(at(row, QuantMetric::ScarPct), 0.0);
  EXPECT_EQ(at(row, QuantMetric::MoPct), 0.0);
}

TEST(Option3, NeverAboveHundredAndHundredOnlyForIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::array<double, 3>> mv;
    std::vector<std::array<double, 3>> av;
    for (int s = 0; s < 5; ++s) {
      mv.push_back({v(rng) + 1, v(rng) + 1, v(rng) / 2 + 1});
      av.push_back({v(rng), v(rng), v(rng) / 2});
    }
    for (const auto& cell : ls::option3(stacks("manual", mv), stacks("a", av))) {
      EXPECT_LE(*cell, 100.0);
      EXPECT_LT(*cell, 100.0);
    }
  }
}

TEST(Options, ScaleCovariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(0.5, 10.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::array<double, 3>> mv;
    std::vector<std::array<double, 3>> av;
    for (int s = 0; s < 6; ++s) {
      mv.push_back({v(rng), v(rng), v(rng)});
      av.push_back({v(rng), v(rng), v(rng)});
    }
    const double k = 0.25 + double(i) / 10.0;
    auto scale = [k](std::vector<std::array<double, 3>> x) {
      for (auto& r : x) r[0] *= k;
      return x;
    };
    const auto m = stacks("manual", mv);
    const auto a = stacks("a", av);
    const auto ms = stacks("manual", scale(mv));
    const auto as = stacks("a", scale(av));
    EXPECT_NEAR(*ls::option2(m, a)[0], *ls::option2(ms, as)[0], 1e-9);
    EXPECT_NEAR(*ls::option3(m, a)[0], *ls::option3(ms, as)[0], 1e-9);
  }
}

TEST(Tally, PublishedTablesGiveFiveOfNineForL256) {
  const auto tables = ls::testing::published_tables();
  ASSERT_EQ(tables.size(), 3u);
  const auto t = ls::tally(tables);
  EXPECT_EQ(t.slots, 9);
  EXPECT_EQ(t.networks, (std::vector<std::string>{"C128", "N256", "B256", "L256"}));
  EXPECT_EQ(t.wins, (std::vector<int>{2, 2, 2, 5}));
  EXPECT_EQ(ls::truncate_percent(t.fraction(3)), 55.5);
  EXPECT_EQ(ls::truncate_percent(t.fraction(0)), 22.2);
}

TEST(Tally, DominantNetworkWinsEverySlot) {
  const auto t = make_table({"a", "b", "c"}, {{1, 1, 1}, {9, 9, 9}, {2, 2, 2}});
  const std::vector<ls::OptionTable> tables{t, t, t};
  const auto r = ls::tally(tables);
  EXPECT_EQ(r.wins, (std::vector<int>{0, 9, 0}));
}

TEST(Tally, AllEqualCreditsEveryone) {
  const auto t = make_table({"a", "b"}, {{5, 5, 5}, {5, 5, 5}});
  const std::vector<ls::OptionTable> tables{t, t, t};
  EXPECT_EQ(ls::tally(tables).wins, (std::vector<int>{9, 9}));
}

TEST(Tally, PermutationInvariantAndCreditsSomeoneEverySlot) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> v(0, 5);
  for (int i = 0; i < 100; ++i) {
    std::vector<ls::OptionTable> tables;
    for (int k = 0; k < 3; ++k) {
      std::vector<std::array<double, 3>> rows;
      for (int n = 0; n < 4; ++n) rows.push_back({double(v(rng)), double(v(rng)), double(v(rng))});
      tables.push_back(make_table({"a", "b", "c", "d"}, rows));
    }
    const auto base = ls::tally(tables);
    int credited = 0;
    for (const int w : base.wins) credited += w;
    EXPECT_GE(credited, 9);

    std::vector<std::size_t> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    auto shuffled = tables;
    for (auto& t : shuffled) {
      ls::OptionTable p{t.title, {}, {}};
      for (const auto j : perm) {
        p.networks.push_back(t.networks[j]);
        p.rows.push_back(t.rows[j]);
      }
      t = p;
    }
    const auto r = ls::tally(shuffled);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r.wins[j], base.wins[perm[j]]);
  }
}

TEST(Tally, RejectsMalformedTables) {
  EXPECT_THROW(ls::tally(std::span<const ls::OptionTable>{}), ls::ValidationError);
  const auto lone = make_table({"a"}, {{1, 1, 1}});
  EXPECT_THROW(ls::tally(std::vector<ls::OptionTable>{lone}), ls::ValidationError);
  auto a = make_table({"a", "b"}, {{1, 1, 1}, {2, 2, 2}});
  auto b = make_table({"a", "c"}, {{1, 1, 1}, {2, 2, 2}});
  EXPECT_THROW(ls::tally(std::vector<ls::OptionTable>{a, b}), ls::ValidationError);
  ls::OptionTable empty{"e", {"a", "b"}, {ls::OptionRow{}, ls::OptionRow{}}};
  EXPECT_THROW(ls::tally(std::vector<ls::OptionTable>{empty}), ls::ValidationError);
}

TEST(Compare, FixtureReproducesFirstTable) {
  const auto cmp = ls::compare_quantification(ls::testing::option1_fixture_records(), {});
  const auto published = ls::testing::published_tables();
  const auto& got = cmp.tables[0];
  ASSERT_EQ(got.networks, published[0].networks);
  for (std::size_t n = 0; n < 4; ++n) {
    for (const auto m : ls::kQuantMetrics) {
      const double v = *got.value(m, n);
      EXPECT_EQ(v, 100.0 * double(ls::testing::kOption1Hits[n][std::size_t(m)]) / 24.0);
      EXPECT_EQ(truncate1(v), *published[0].value(m, n)) << got.networks[n] << " " << ls::to_string(m);
    }
  }
}

TEST(Compare, IdenticalMethodGivesHundredPercent) {
  auto records = stacks("manual", {{10, 20, 1}, {5, 15, 2}});
  for (auto r : stacks("auto", {{10, 20, 1}, {5, 15, 2}})) records.push_back(r);
  const auto cmp = ls::compare_quantification(records, {});
  for (const auto m : ls::kQuantMetrics) {
    EXPECT_EQ(cmp.tables[1].value(m, 0), 100.0);
    EXPECT_EQ(cmp.tables[2].value(m, 0), 100.0);
  }
}

TEST(Compare, MissingManualIsAnError) {
  EXPECT_THROW(ls::compare_quantification(stacks("auto", {{1, 1, 1}}), {}), ls::ValidationError);
  EXPECT_THROW(ls::compare_quantification(stacks("manual", {{1, 1, 1}}), {}), ls::ValidationError);
}

TEST(Csv, RecordsRoundTrip) {
  const auto records = ls::testing::option1_fixture_records();
  std::istringstream in(ls::testing::records_csv(records));
  const auto parsed = ls::read_quant_csv(in);
  ASSERT_EQ(parsed.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(parsed[i].stack_id, records[i].stack_id);
    EXPECT_EQ(parsed[i].method, records[i].method);
    EXPECT_EQ(parsed[i].scar_ml, records[i].scar_ml);
    EXPECT_EQ(parsed[i].mo_pct, records[i].mo_pct);
  }
}

TEST(Csv, RejectsBadInput) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return ls::read_quant_csv(in);
  };
  EXPECT_THROW(parse("id,method,a,b,c\n"), ls::ValidationError);
  EXPECT_THROW(parse("stack_id,method,scar_ml,scar_pct,mo_pct\ns1,manual,1,2\n"), ls::ValidationError);
  EXPECT_THROW(parse("stack_id,method,scar_ml,scar_pct,mo_pct\ns1,manual,x,2,3\n"), ls::ValidationError);
  EXPECT_THROW(parse("stack_id,method,scar_ml,scar_pct,mo_pct\ns1,manual,1,200,3\n"), ls::ValidationError);
  EXPECT_THROW(parse("stack_id,method,scar_ml,scar_pct,mo_pct\ns1,manual,-1,2,3\n"), ls::ValidationError);
}

TEST(Csv, OptionTablesRoundTrip) {
  const auto tables = ls::testing::published_tables();
  std::ostringstream os;
  ls::write_option_tables(os, tables);
  std::istringstream in(os.str());
  const auto again = ls::read_option_tables(in);
  ASSERT_EQ(again.size(), tables.size());
  for (std::size_t t = 0; t < tables.size(); ++t) {
    EXPECT_EQ(again[t].title, tables[t].title);
    EXPECT_EQ(again[t].rows, tables[t].rows);
  }
}

TEST(Csv, OptionTablesRejectIncompleteInput) {
  std::istringstream missing("table,metric,a,b\nt,scar_ml,1,2\n");
  EXPECT_THROW(ls::read_option_tables(missing), ls::ValidationError);
  std::istringstream dup("table,metric,a,b\nt,scar_ml,1,2\nt,scar_ml,1,2\n");
  EXPECT_THROW(ls::read_option_tables(dup), ls::ValidationError);
}
