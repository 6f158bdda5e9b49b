// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ttt_lab/recall_bench.hpp"

namespace ttt {
namespace {

StreamConfig config_for(RuleKind rule, const RecallDims& dims, std::uint64_t seed = 1) {
  StreamConfig cfg;
  cfg.rule = rule;
  cfg.dims = dims;
  cfg.seed = seed;
  return cfg;
}

double mean_abs_offdiag_dot(const RecallTask& task) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < task.pairs.size(); ++i)
    for (std::size_t j = i + 1; j < task.pairs.size(); ++j) {
      sum += std::abs(task.pairs[i].key.dot(task.pairs[j].key));
      ++n;
    }
  return sum / static_cast<double>(n);
}

// task generation

TEST(GenRecallTask, OrthonormalKeys) {
  const RecallDims dims{1, 16, 8, 4};
  const RecallTask task = gen_recall_task(4, dims, KeyMode::orthonormal(), 3);
  ASSERT_EQ(task.pairs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(task.pairs[i].key.norm(), 1.0, 1e-9);
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_LE(std::abs(task.pairs[i].key.dot(task.pairs[j].key)), 1e-9);
    EXPECT_LE(task.pairs[i].value.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(GenRecallTask, FullOrthonormalBasisAcrossSeeds) {
  const RecallDims dims{1, 40, 32, 4};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RecallTask task = gen_recall_task(32, dims, KeyMode::orthonormal(), seed);
    Matrix k(32, 32);
    for (Index i = 0; i < 32; ++i) k.col(i) = task.pairs[static_cast<std::size_t>(i)].key;
    EXPECT_LE((k.transpose() * k - Matrix::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(GenRecallTask, DeterministicPerSeed) {
  const RecallDims dims{1, 16, 8, 4};
  for (KeyMode mode : {KeyMode::orthonormal(), KeyMode::random_unit(), KeyMode::correlated(0.5)}) {
    const RecallTask a = gen_recall_task(6, dims, mode, 11);
    const RecallTask b = gen_recall_task(6, dims, mode, 11);
    const RecallTask c = gen_recall_task(6, dims, mode, 12);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_EQ(a.pairs[i].key, b.pairs[i].key);
      EXPECT_EQ(a.pairs[i].value, b.pairs[i].value);
    }
    EXPECT_NE(a.pairs[0].key, c.pairs[0].key);
  }
}

TEST(GenRecallTask, CorrelatedKeysAreStronglyAligned) {
  const RecallDims dims{1, 32, 16, 8};
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const RecallTask task = gen_recall_task(16, dims, KeyMode::correlated(0.9), seed);
    for (const auto& p : task.pairs) EXPECT_NEAR(p.key.norm(), 1.0, 1e-9);
    const double m = mean_abs_offdiag_dot(task);
    EXPECT_GE(m, 0.8);
    EXPECT_LE(m, 0.95);
    total += m;
  }
  EXPECT_GE(total / 100.0, 0.8);
  EXPECT_LE(total / 100.0, 0.95);
}

TEST(GenRecallTask, Errors) {
  const RecallDims dims{1, 16, 8, 4};
  EXPECT_THROW(gen_recall_task(9, dims, KeyMode::orthonormal(), 1), InvalidArgument);
  EXPECT_THROW(gen_recall_task(0, dims, KeyMode::random_unit(), 1), InvalidArgument);
  EXPECT_THROW(gen_recall_task(3, dims, KeyMode::correlated(1.0), 1), InvalidArgument);
}

TEST(KeyMode, ParseAndLabelRoundTrip) {
  for (const char* text : {"orthonormal", "random_unit", "correlated:0.9", "correlated:0.25"})
    EXPECT_EQ(KeyMode::parse(text).label(), text);
  EXPECT_THROW(KeyMode::parse("correlated:"), InvalidArgument);
  EXPECT_THROW(KeyMode::parse("gaussian"), InvalidArgument);
}

TEST(RuleNames, ParseAndLabelRoundTrip) {
  for (const char* text : {"full_attention", "vanilla_rnn", "hebbian", "delta:const=1", "delta:input",
                           "ttt3r:gate", "ttt3r:const=0.5", "ttt3r:input", "ttt3r:per_token"})
    EXPECT_EQ(rule_label(parse_rule(text)), text);
  EXPECT_EQ(rule_label(parse_rule("delta")), "delta:const=1");
  EXPECT_EQ(rule_label(parse_rule("ttt3r")), "ttt3r:gate");
  EXPECT_THROW(parse_rule("lstm"), InvalidArgument);
  EXPECT_THROW(parse_rule("hebbian:gate"), InvalidArgument);
  EXPECT_THROW(parse_rule("ttt3r:const=0"), InvalidArgument);
  EXPECT_FALSE(bench_supports(parse_rule("delta:gate")));
  EXPECT_TRUE(bench_supports(parse_rule("ttt3r:per_token")));
}

// adversarial task

TEST(AdversarialTask, DistractorLogitsAreSuppressedForEveryStateToken) {
  const RecallDims dims{4, 24, 16, 8};
  const double scale = 64.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix q = initial_state_queries(dims, seed);
    const RecallTask task = gen_adversarial_task({}, dims, q, scale, seed);
    EXPECT_EQ(task.pairs.size(), 32u);
    ASSERT_EQ(task.distractors.size(), 128u);
    std::size_t last = 0;
    for (const auto& d : task.distractors) {
      EXPECT_NEAR(d.key.norm(), 1.0, 1e-12);
      EXPECT_GE(d.position, last);
      EXPECT_LE(d.position, 32u);
      last = d.position;
      const Vector logits = scale * (q * d.key);
      EXPECT_LE(logits.maxCoeff(), -5.0 + 1e-9);
      EXPECT_GE(logits.minCoeff(), -8.0 - 1e-9);
      // One shared logit across state tokens.
      EXPECT_NEAR(logits.maxCoeff(), logits.minCoeff(), 1e-9);
    }
  }
}

TEST(AdversarialTask, RejectsUnreachableSuppression) {
  const RecallDims dims{4, 24, 16, 8};
  const Matrix q = initial_state_queries(dims, 1);
  EXPECT_THROW(gen_adversarial_task({}, dims, q, 1.0, 1), InvalidArgument);
  EXPECT_THROW(gen_adversarial_task({}, dims, Matrix::Ones(16, 16), 64.0, 1), InvalidArgument);
}

TEST(AdversarialTask, InitialStateQueriesMatchStreamState) {
  const RecallDims dims{4, 24, 16, 8};
  const TokenState s = initial_token_state(dims, 9);
  const ProjectionSet p = bench_projections(dims, 9);
  const Matrix q = s.tokens * p.w_q;
  EXPECT_EQ(initial_state_queries(dims, 9), q.leftCols(16));
  EXPECT_TRUE(q.rightCols(8).isZero(0));
}

// streams

TEST(RunStream, FullAttentionSaturatedRecallIsExact) {
  const RecallDims dims{1, 96, 64, 32};
  const RecallTask task = gen_recall_task(64, dims, KeyMode::orthonormal(), 5);
  StreamConfig cfg = config_for(FullAttentionAppend{}, dims);
  cfg.softmax_scale = 1.0;
  const StreamResult r = run_stream(task, cfg);
  ASSERT_EQ(r.curve.per_position_error.size(), 64u);
  for (double e : r.curve.per_position_error) EXPECT_LE(e, 1e-8);
  EXPECT_TRUE(r.gates.per_frame_gates.empty());
}

TEST(RunStream, FactoredFullAttentionMatchesSelectorProjectionPath) {
  const RecallDims dims{1, 14, 8, 4};
  const RecallTask task = gen_recall_task(8, dims, KeyMode::random_unit(), 7);
  StreamConfig cfg = config_for(FullAttentionAppend{}, dims);
  cfg.softmax_scale = 0.7;
  cfg.query_gain = 3.0;
  const StreamResult r = run_stream(task, cfg);

  const ProjectionSet p = ProjectionSet::pair_selector(dims.c, dims.key_dim, dims.value_dim, 1);
  KvCache cache;
  for (const auto& pair : task.pairs) {
    Matrix x = Matrix::Zero(1, dims.c);
    x.row(0).head(8) = pair.key.transpose();
    x.row(0).segment(8, 4) = pair.value.transpose();
    cache = update_full_attention(std::move(cache), {x}, p);
  }
  for (std::size_t i = 0; i < task.pairs.size(); ++i) {
    Matrix q = Matrix::Zero(1, dims.c);
    q.row(0).head(8) = 3.0 * task.pairs[i].key.transpose();
    const Matrix y = read_full_attention(cache, {q}, p, AttentionOptions{0.7}) - q;
    const double err = (y.row(0).segment(8, 4).transpose() - task.pairs[i].value).squaredNorm();
    EXPECT_NEAR(r.curve.per_position_error[i], err, 1e-12);
    EXPECT_LE(y.row(0).head(8).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RunStream, DeltaRuleExactWithinCapacity) {
  const RecallDims dims{1, 24, 16, 8};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RecallTask task = gen_recall_task(16, dims, KeyMode::orthonormal(), seed);
    const StreamResult r = run_stream(task, config_for(DeltaRule{}, dims));
    for (double e : r.curve.per_position_error) EXPECT_LE(e, 1e-10);
    EXPECT_EQ(r.gates.per_frame_gates.size(), 16u);
  }
}

TEST(RunStream, DeltaRuleOverCapacityLeavesErrors) {
  const RecallDims dims{1, 24, 8, 4};
  const RecallTask task = gen_recall_task(12, dims, KeyMode::random_unit(), 2);
  const StreamResult r = run_stream(task, config_for(DeltaRule{}, dims));
  const auto& e = r.curve.per_position_error;
  EXPECT_GT(*std::max_element(e.begin(), e.end()), 1e-6);
  // The last write is always exact.
  EXPECT_LE(e.back(), 1e-20);
}

TEST(RunStream, ResetEveryFrameLeavesOnlyLastPair) {
  const RecallDims dims{1, 16, 8, 4};
  const RecallTask task = gen_recall_task(6, dims, KeyMode::orthonormal(), 4);
  StreamConfig cfg = config_for(DeltaRule{}, dims);
  cfg.reset_period = 1;
  const StreamResult r = run_stream(task, cfg);
  for (std::size_t i = 0; i + 1 < 6; ++i)
    EXPECT_NEAR(r.curve.per_position_error[i], task.pairs[i].value.squaredNorm(), 1e-15);
  EXPECT_LE(r.curve.per_position_error[5], 1e-20);
}

TEST(RunStream, ResetRestoresInitialStateExactly) {
  const RecallDims dims{3, 16, 8, 4};
  const RecallTask task = gen_recall_task(23, dims, KeyMode::random_unit(), 8);
  for (const char* rule : {"vanilla_rnn", "ttt3r", "hebbian", "delta", "full_attention"}) {
    StreamConfig cfg = config_for(parse_rule(rule), dims, 8);
    cfg.reset_period = 5;
    std::optional<RuleState> first;
    std::size_t checked = 0;
    run_stream(task, cfg, [&](std::size_t frame, const RuleState& state) {
      if (frame == 0) first = state;
      if (frame % 5 != 0) return;
      ++checked;
      std::visit(
          [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            const auto& init = std::get<S>(*first);
            if constexpr (std::is_same_v<S, KvCache>) {
              EXPECT_TRUE(s.empty());
              EXPECT_TRUE(init.empty());
            } else if constexpr (std::is_same_v<S, TokenState>) {
              EXPECT_EQ(s.tokens, init.tokens);
            } else {
              EXPECT_EQ(s.s, init.s);
            }
          },
          state);
    });
    EXPECT_EQ(checked, 5u) << rule;
  }
}

TEST(RunStream, GateTraceHasOneEntryPerFrame) {
  const RecallDims dims{2, 16, 8, 4};
  const RecallTask task = gen_recall_task(9, dims, KeyMode::random_unit(), 3);
  for (const char* rule : {"ttt3r:gate", "ttt3r:input", "ttt3r:per_token", "ttt3r:const=0.5"}) {
    StreamConfig cfg = config_for(parse_rule(rule), dims);
    cfg.pairs_per_frame = 2;
    const StreamResult r = run_stream(task, cfg);
    ASSERT_EQ(r.gates.per_frame_gates.size(), 5u) << rule;
    for (const auto& g : r.gates.per_frame_gates) {
      ASSERT_EQ(g.beta.size(), 2);
      for (Index i = 0; i < 2; ++i) {
        EXPECT_GT(g.beta(i), 0.0);
        EXPECT_LE(g.beta(i), 1.0);
      }
    }
  }
  for (const char* rule : {"vanilla_rnn", "hebbian", "full_attention"})
    EXPECT_TRUE(run_stream(task, config_for(parse_rule(rule), dims)).gates.per_frame_gates.empty()) << rule;
}

TEST(RunStream, BatchedFramesMatchSequentialHebbian) {
  const RecallDims dims{1, 16, 8, 4};
  const RecallTask task = gen_recall_task(10, dims, KeyMode::random_unit(), 6);
  StreamConfig cfg = config_for(LinearAttentionHebbian{}, dims);
  const StreamResult one = run_stream(task, cfg);
  cfg.pairs_per_frame = 3;
  const StreamResult three = run_stream(task, cfg);
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_NEAR(one.curve.per_position_error[i], three.curve.per_position_error[i], 1e-12);
}

TEST(RunStream, ErrorsOnMismatchedDimsAndUnsupportedRule) {
  const RecallDims dims{1, 16, 8, 4};
  const RecallTask task = gen_recall_task(4, dims, KeyMode::random_unit(), 1);
  EXPECT_THROW(run_stream(task, config_for(DeltaRule{}, RecallDims{1, 16, 6, 4})), DimensionError);
  EXPECT_THROW(run_stream(task, config_for(VanillaSoftmaxRnn{}, RecallDims{1, 10, 8, 4})), DimensionError);
  EXPECT_THROW(run_stream(task, config_for(DeltaRule{ConfidenceGate{}}, dims)), UnsupportedError);
}

// Full attention bounds every fixed-size state from below on every task
// family once its queries are saturated.
TEST(CompareRules, RuleSandwich) {
  const RecallDims dims{2, 24, 16, 8};
  const std::vector<KeyMode> modes = {KeyMode::orthonormal(), KeyMode::random_unit(), KeyMode::correlated(0.9)};
  for (const KeyMode& mode : modes) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const RecallTask task = gen_recall_task(16, dims, mode, seed);
      std::vector<StreamConfig> configs;
      for (const char* rule : {"full_attention", "vanilla_rnn", "ttt3r", "ttt3r:const=0.5", "hebbian", "delta",
                               "delta:input"}) {
        StreamConfig cfg = config_for(parse_rule(rule), dims, seed);
        cfg.softmax_scale = 1.0;
        cfg.query_gain = 4000.0;
        configs.push_back(cfg);
      }
      const ComparisonReport rep = compare_rules(task, configs);
      for (std::size_t i = 1; i < rep.rows.size(); ++i)
        EXPECT_LE(rep.rows[0].mean_sq_error, rep.rows[i].mean_sq_error + 1e-8)
            << mode.label() << " seed " << seed << " vs " << rep.rows[i].rule;
    }
  }
}

TEST(CompareRules, SingleConfigMatchesRunStreamAndDuplicatesAgree) {
  const RecallDims dims{2, 24, 16, 8};
  const RecallTask task = gen_recall_task(12, dims, KeyMode::random_unit(), 2);
  const StreamConfig cfg = config_for(Ttt3r{}, dims);
  const std::vector<StreamConfig> one = {cfg};
  const ComparisonReport rep = compare_rules(task, one);
  ASSERT_EQ(rep.rows.size(), 1u);
  const StreamResult direct = run_stream(task, cfg);
  EXPECT_EQ(rep.runs[0].curve.per_position_error, direct.curve.per_position_error);
  EXPECT_EQ(rep.rows[0].mean_sq_error, direct.curve.mean());
  const std::vector<StreamConfig> dup = {cfg, cfg};
  const ComparisonReport twice = compare_rules(task, dup);
  EXPECT_EQ(twice.rows[0].mean_sq_error, twice.rows[1].mean_sq_error);
  EXPECT_EQ(twice.rows[0].worst_position, twice.rows[1].worst_position);
}

TEST(CompareRules, ParallelEqualsSerialByteForByte) {
  const RecallDims dims{4, 40, 16, 16};
  const RecallTask task = gen_recall_task(40, dims, KeyMode::correlated(0.5), 13);
  std::vector<StreamConfig> configs;
  for (const char* rule : {"full_attention", "vanilla_rnn", "ttt3r", "ttt3r:per_token", "hebbian", "delta"})
    configs.push_back(config_for(parse_rule(rule), dims, 13));
  auto dump = [&](std::size_t threads) {
    const ComparisonReport rep = compare_rules(task, configs, threads);
    std::ostringstream s;
    write_curves_csv(s, rep.runs);
    write_gates_csv(s, rep.runs);
    write_summary_csv(s, rep.rows);
    return s.str();
  };
  const std::string serial = dump(1);
  EXPECT_EQ(dump(4), serial);
  EXPECT_EQ(dump(0), serial);
}

TEST(CompareRules, AdversarialTaskFavoursConfidenceGate) {
  const RecallDims dims{4, 24, 16, 8};
  const std::uint64_t seed = 3;
  const RecallTask task = gen_adversarial_task({}, dims, initial_state_queries(dims, seed), 64.0, seed);
  std::vector<StreamConfig> configs;
  for (const char* rule : {"ttt3r", "vanilla_rnn"}) {
    StreamConfig cfg = config_for(parse_rule(rule), dims, seed);
    cfg.softmax_scale = 64.0;
    cfg.query_gain = 1.0;
    configs.push_back(cfg);
  }
  const ComparisonReport rep = compare_rules(task, configs);
  EXPECT_LT(rep.rows[0].mean_sq_error, rep.rows[1].mean_sq_error);
  const auto& gates = rep.runs[0].gates.per_frame_gates;
  ASSERT_EQ(gates.size(), 160u);
  // Distractor d sits at stream index position + d.
  const double ceiling = 1.0 / (1.0 + std::exp(5.0));
  for (std::size_t d = 0; d < task.distractors.size(); ++d) {
    const auto& beta = gates[task.distractors[d].position + d].beta;
    EXPECT_LE(beta.maxCoeff(), ceiling + 1e-12);
  }
}

TEST(CsvWriters, HeadersAndRowCounts) {
  const RecallDims dims{2, 16, 8, 4};
  const RecallTask task = gen_recall_task(3, dims, KeyMode::random_unit(), 1);
  const std::vector<StreamConfig> configs = {config_for(Ttt3r{}, dims), config_for(DeltaRule{}, dims)};
  const ComparisonReport rep = compare_rules(task, configs);
  std::ostringstream curves, gates, trace, summary;
  write_curves_csv(curves, rep.runs);
  write_gates_csv(gates, rep.runs);
  write_gate_trace_csv(trace, rep.runs[0].gates);
  write_summary_csv(summary, rep.rows);
  EXPECT_TRUE(curves.str().starts_with("rule,position,sq_error\nttt3r:gate,0,"));
  EXPECT_TRUE(gates.str().starts_with("rule,frame,token,beta\nttt3r:gate,0,0,"));
  EXPECT_TRUE(trace.str().starts_with("frame,token,beta\n0,0,"));
  EXPECT_TRUE(summary.str().starts_with("rule,mean_sq_error,max_sq_error,worst_position,stream_length\n"));
  const std::string c = curves.str();
  const std::string g = gates.str();
  EXPECT_EQ(std::count(c.begin(), c.end(), '\n'), 1 + 6);
  // ttt3r: 3 frames x 2 tokens; delta: 3 frames x 1.
  EXPECT_EQ(std::count(g.begin(), g.end(), '\n'), 1 + 6 + 3);
}

}  // namespace
}  // namespace ttt
