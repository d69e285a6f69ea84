#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dialogkit/data_prep.hpp"
#include "dialogkit/errors.hpp"
#include "dialogkit/rng.hpp"
#include "support.hpp"

using namespace dialogkit;
using testsupport::make_dialog;
using testsupport::make_turn;
using testsupport::TempDir;

namespace {
const std::string kFixtures = DIALOGKIT_FIXTURE_DIR;

Dialog two_turn_dialog() {
    return make_dialog("conv-1",
                       {make_turn("Who proposed it?", {"Charles Darwin proposed it.",
                                                       "He published in 1859."}),
                        make_turn("When?", {"In 1859."})},
                       "Evolution");
}
}  // namespace

// --- ingest ------------------------------------------------------------------

TEST_CASE("ingest_corpus reads a whole-file JSON array of turn records") {
    IngestResult result =
        ingest_corpus(kFixtures + "/qrecc_small.json", SourceFormat::qrecc);
    CHECK(result.records_total == 3);
    CHECK(result.records_skipped == 0);

    // Conversation 7 has rewrites on every turn -> raw + rewritten siblings.
    // Conversation 8 has no rewrite -> raw only.
    REQUIRE(result.dialogs.size() == 3);
    CHECK(result.dialogs[0].id == "qrecc-7::raw");
    CHECK(result.dialogs[1].id == "qrecc-7::rewritten");
    CHECK(result.dialogs[2].id == "qrecc-8::raw");

    const Dialog& raw = result.dialogs[0];
    CHECK(raw.source == DialogSource::qrecc);
    REQUIRE(raw.turns.size() == 2);
    CHECK(raw.turns[0].question == "Who proposed it?");
    CHECK(raw.turns[0].question_type == QuestionType::raw);
    CHECK(raw.turns[0].answer.sentences ==
          std::vector<std::string>{"Charles Darwin proposed it.", "He published in 1859."});
    CHECK(raw.turns[1].question == "What was the book called?");

    const Dialog& rewritten = result.dialogs[1];
    CHECK(rewritten.turns[0].question == "Who proposed the theory of evolution?");
    CHECK(rewritten.turns[0].question_type == QuestionType::rewritten);
    // Answers are shared between the two variants.
    CHECK(rewritten.turns[0].answer == raw.turns[0].answer);

    const Dialog& raw_only = result.dialogs[2];
    CHECK(raw_only.turns[0].question == "What is a glacier?");
    CHECK(raw_only.turns[0].answer.sentences.size() == 2);
}

TEST_CASE("ingest_corpus reads JSONL conversations with titles") {
    IngestResult result =
        ingest_corpus(kFixtures + "/orquac_small.jsonl", SourceFormat::orquac);
    REQUIRE(result.dialogs.size() == 2);
    CHECK(result.dialogs[0].id == "orquac-C_abc::raw");
    CHECK(result.dialogs[1].id == "orquac-C_abc::rewritten");
    CHECK(result.dialogs[0].title == std::optional<std::string>("Marie Curie"));
    REQUIRE(result.dialogs[0].turns.size() == 2);
    CHECK(result.dialogs[0].turns[0].question == "where was she born?");
    CHECK(result.dialogs[1].turns[1].question == "When was Marie Curie born?");
    CHECK(result.dialogs[0].turns[1].answer.sentences ==
          std::vector<std::string>{"In 1867."});
}

TEST_CASE("ingest_corpus turns instruction records into single-turn dialogs") {
    IngestResult result =
        ingest_corpus(kFixtures + "/dolly_small.jsonl", SourceFormat::dolly);
    REQUIRE(result.dialogs.size() == 2);
    CHECK(result.dialogs[0].id == "dolly-1");
    CHECK(result.dialogs[0].source == DialogSource::dolly);
    CHECK_FALSE(result.dialogs[0].title.has_value());
    REQUIRE(result.dialogs[0].turns.size() == 1);
    CHECK(result.dialogs[0].turns[0].question == "Why is the sky blue?");
    // The response is split into sentences on ingest.
    CHECK(result.dialogs[0].turns[0].answer.sentences.size() == 3);
    CHECK(result.dialogs[1].id == "dolly-2");
    CHECK(result.dialogs[1].turns[0].answer.sentences.size() == 1);
}

TEST_CASE("ingest_corpus tolerates an empty file") {
    TempDir dir;
    testsupport::write_file(dir.file("empty.jsonl"), "");
    IngestResult result = ingest_corpus(dir.file("empty.jsonl"), SourceFormat::qrecc);
    CHECK(result.dialogs.empty());
    CHECK(result.records_total == 0);
}

TEST_CASE("ingest_corpus fails when more than 1% of records are unusable") {
    CHECK_THROWS_AS(ingest_corpus(kFixtures + "/qrecc_corrupt.jsonl", SourceFormat::qrecc),
                    ParseError);
}

TEST_CASE("ingest_corpus skips and counts records below the failure threshold") {
    TempDir dir;
    // 1 bad record out of 200 (0.5%) stays under the 1% threshold.
    std::string content;
    for (int i = 1; i <= 199; ++i) {
        content += R"({"Conversation_no": )" + std::to_string(i) +
                   R"(, "Turn_no": 1, "Question": "Q?", "Rewrite": "", "Answer": "A."})" +
                   "\n";
    }
    content += "{broken\n";
    testsupport::write_file(dir.file("mostly_good.jsonl"), content);

    IngestResult result = ingest_corpus(dir.file("mostly_good.jsonl"), SourceFormat::qrecc);
    CHECK(result.records_total == 200);
    CHECK(result.records_skipped == 1);
    CHECK(result.dialogs.size() == 199);
}

TEST_CASE("ingest_corpus orders multi-record conversations by turn number") {
    TempDir dir;
    testsupport::write_file(
        dir.file("shuffled.jsonl"),
        R"({"Conversation_no": 1, "Turn_no": 2, "Question": "Second?", "Rewrite": "", "Answer": "B."})"
        "\n"
        R"({"Conversation_no": 1, "Turn_no": 1, "Question": "First?", "Rewrite": "", "Answer": "A."})"
        "\n");
    IngestResult result = ingest_corpus(dir.file("shuffled.jsonl"), SourceFormat::qrecc);
    REQUIRE(result.dialogs.size() == 1);
    CHECK(result.dialogs[0].turns[0].question == "First?");
    CHECK(result.dialogs[0].turns[1].question == "Second?");
}

TEST_CASE("a conversation with a partially missing rewrite emits no rewritten variant") {
    TempDir dir;
    testsupport::write_file(
        dir.file("partial.jsonl"),
        R"({"Conversation_no": 9, "Turn_no": 1, "Question": "Who?", "Rewrite": "Who won?", "Answer": "The hosts."})"
        "\n"
        R"({"Conversation_no": 9, "Turn_no": 2, "Question": "And then?", "Rewrite": "", "Answer": "A rematch."})"
        "\n");
    IngestResult result = ingest_corpus(dir.file("partial.jsonl"), SourceFormat::qrecc);
    REQUIRE(result.dialogs.size() == 1);
    CHECK(result.dialogs[0].id == "qrecc-9::raw");
}

TEST_CASE("variant id helpers strip and append style suffixes") {
    CHECK(make_variant_id("conv7", QuestionStyle::raw) == "conv7::raw");
    CHECK(make_variant_id("conv7", QuestionStyle::rewritten) == "conv7::rewritten");
    CHECK(variant_base_id("conv7::raw") == "conv7");
    CHECK(variant_base_id("conv7::rewritten") == "conv7");
    CHECK(variant_base_id("dolly-12") == "dolly-12");
}

// --- filter ------------------------------------------------------------------

TEST_CASE("filter removes boilerplate questions and splices the dialog") {
    Dialog d = make_dialog(
        "f-1",
        {make_turn("What is a volcano?", {"A rupture in the crust."}),
         make_turn("Are there any other interesting aspects about this article?",
                   {"Some erupt under the sea."}),
         make_turn("How do they form?", {"Where magma reaches the surface."})});

    auto [kept, report] = filter_other_interesting({d});
    REQUIRE(kept.size() == 1);
    REQUIRE(kept[0].turns.size() == 2);
    CHECK(kept[0].turns[0].question == "What is a volcano?");
    CHECK(kept[0].turns[1].question == "How do they form?");
    CHECK(report.removed_pairs == 1);
    CHECK(report.pair_fraction == doctest::Approx(1.0 / 3.0));
    CHECK(report.dialog_fraction == doctest::Approx(1.0));
}

TEST_CASE("filter keeps unrelated questions") {
    Dialog d = make_dialog("f-2", {make_turn("What is her early life?", {"She grew up."})});
    auto [kept, report] = filter_other_interesting({d});
    CHECK(kept.size() == 1);
    CHECK(report.removed_pairs == 0);
    CHECK(report.pair_fraction == 0.0);
}

TEST_CASE("filter matching is case-insensitive and drops emptied dialogs") {
    Dialog d = make_dialog(
        "f-3", {make_turn("What OTHER INTERESTING facts are there?", {"Many."})});
    auto [kept, report] = filter_other_interesting({d});
    CHECK(kept.empty());
    CHECK(report.removed_pairs == 1);
    CHECK(report.dialog_fraction == doctest::Approx(1.0));
}

TEST_CASE("filter on a 100-pair corpus with 4 contaminated pairs reports 0.04") {
    // 25 dialogs x 4 turns; dialogs 0, 6, 12, 18 carry one contaminated turn.
    std::vector<Dialog> dialogs;
    for (int d = 0; d < 25; ++d) {
        std::vector<Turn> turns;
        for (int t = 0; t < 4; ++t) {
            bool contaminated = (d % 6 == 0 && d < 24) && t == 2;
            std::string q = contaminated
                                ? "Any other interesting aspects about this article?"
                                : "Question " + std::to_string(d) + "-" + std::to_string(t) +
                                      "?";
            turns.push_back(make_turn(q, {"Answer " + std::to_string(t) + "."}));
        }
        dialogs.push_back(make_dialog("bulk-" + std::to_string(d), std::move(turns)));
    }

    auto [kept, report] = filter_other_interesting(dialogs);
    CHECK(report.removed_pairs == 4);
    CHECK(report.pair_fraction == doctest::Approx(0.04));
    CHECK(report.dialog_fraction == doctest::Approx(4.0 / 25.0));

    // Exhaustive post-scan: the contaminating substring is gone.
    std::size_t kept_pairs = 0;
    for (const Dialog& dialog : kept) {
        for (const Turn& turn : dialog.turns) {
            ++kept_pairs;
            std::string lowered = turn.question;
            std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            CHECK(lowered.find("other interesting") == std::string::npos);
        }
    }
    CHECK(kept_pairs == 96);
}

// --- mask sampling -----------------------------------------------------------

TEST_CASE("sample_mask is deterministic for a fixed generator state") {
    Dialog d = two_turn_dialog();
    PrepConfig config;
    Rng a(42), b(42);
    MaskSpec first = sample_mask(d, config, a);
    MaskSpec second = sample_mask(d, config, b);
    CHECK(first.first_masked_turn == second.first_masked_turn);
    CHECK(first.run_length == second.run_length);
}

TEST_CASE("sample_mask on a single-turn dialog always masks that turn") {
    Dialog d = make_dialog("one", {make_turn("Q?", {"A."})});
    PrepConfig config;
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        MaskSpec mask = sample_mask(d, config, rng);
        CHECK(mask.first_masked_turn == 0);
        CHECK(mask.run_length == 1);
    }
}

TEST_CASE("sample_mask respects the run cap and stays in range") {
    std::vector<Turn> turns;
    for (int t = 0; t < 5; ++t) turns.push_back(make_turn("Q" + std::to_string(t) + "?", {"A."}));
    Dialog d = make_dialog("five", std::move(turns));
    PrepConfig config;  // max_masked_run = 3
    Rng rng(11);

    std::set<std::size_t> seen_lengths;
    for (int i = 0; i < 500; ++i) {
        MaskSpec mask = sample_mask(d, config, rng);
        CHECK(mask.run_length >= 1);
        CHECK(mask.run_length <= 3);
        CHECK(mask.first_masked_turn + mask.run_length <= 5);
        seen_lengths.insert(mask.run_length);
    }
    // All permitted run lengths occur over 500 draws.
    CHECK(seen_lengths == std::set<std::size_t>{1, 2, 3});
}

TEST_CASE("sample_mask rejects an empty dialog") {
    Dialog d = make_dialog("none", {});
    PrepConfig config;
    Rng rng(1);
    CHECK_THROWS_AS(sample_mask(d, config, rng), ValidationError);
}

// --- serialization -----------------------------------------------------------

TEST_CASE("serialize keeps unmasked questions inline and masks the run") {
    // Mask only the second turn of a two-turn dialog.
    Dialog d = two_turn_dialog();
    MaskSpec mask{1, 1};

    TrainingExample example = serialize_training_example(d, mask, PrepConfig{}, true,
                                                         QuestionStyle::raw);
    CHECK(example.input_text ==
          "Type: raw Title: Evolution Who proposed it? Charles Darwin proposed it. "
          "<S0> He published in 1859. <S1> In 1859.");
    CHECK(example.target_text == "<S0> <S1> When? <S2>");
    CHECK(example.num_masked_slots == 2);
}

TEST_CASE("serialize masks both questions when the run covers the dialog") {
    Dialog d = two_turn_dialog();
    MaskSpec mask{0, 2};

    TrainingExample example = serialize_training_example(d, mask, PrepConfig{}, true,
                                                         QuestionStyle::raw);
    CHECK(example.input_text ==
          "Type: raw Title: Evolution <S0> Charles Darwin proposed it. <S1> "
          "He published in 1859. <S2> In 1859.");
    CHECK(example.target_text == "<S0> Who proposed it? <S1> <S2> When? <S3>");
    CHECK(example.num_masked_slots == 3);
}

TEST_CASE("serialize without title or style prefix is just the turn stream") {
    Dialog d = make_dialog("min", {make_turn("Q?", {"A."})});
    MaskSpec mask{0, 1};
    TrainingExample example =
        serialize_training_example(d, mask, PrepConfig{}, true, std::nullopt);
    CHECK(example.input_text == "<S0> A.");
    CHECK(example.target_text == "<S0> Q? <S1>");
    CHECK(example.num_masked_slots == 1);
}

TEST_CASE("serialize announces the rewritten style in the prefix") {
    Dialog d = make_dialog("st", {make_turn("Q?", {"A."})});
    MaskSpec mask{0, 1};
    TrainingExample example =
        serialize_training_example(d, mask, PrepConfig{}, true, QuestionStyle::rewritten);
    CHECK(example.input_text.rfind("Type: rewritten", 0) == 0);
}

TEST_CASE("serialize drops the title when not kept or absent") {
    Dialog with_title = make_dialog("t1", {make_turn("Q?", {"A."})}, "Topic");
    MaskSpec mask{0, 1};
    TrainingExample dropped =
        serialize_training_example(with_title, mask, PrepConfig{}, false, QuestionStyle::raw);
    CHECK(dropped.input_text == "Type: raw <S0> A.");

    Dialog no_title = make_dialog("t2", {make_turn("Q?", {"A."})});
    TrainingExample absent =
        serialize_training_example(no_title, mask, PrepConfig{}, true, QuestionStyle::raw);
    CHECK(absent.input_text == "Type: raw <S0> A.");
}

TEST_CASE("slot count equals the mask run plus intra-answer boundaries") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Turn> turns;
        std::size_t boundary_slots = 0;
        std::size_t n_turns = 1 + rng.uniform_below(5);
        for (std::size_t t = 0; t < n_turns; ++t) {
            std::size_t n_sents = 1 + rng.uniform_below(4);
            boundary_slots += n_sents - 1;
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < n_sents; ++s) {
                sentences.push_back("S" + std::to_string(t) + std::to_string(s) + ".");
            }
            turns.push_back(make_turn("Q" + std::to_string(t) + "?", std::move(sentences)));
        }
        Dialog d = make_dialog("prop", std::move(turns));
        PrepConfig config;
        MaskSpec mask = sample_mask(d, config, rng);

        TrainingExample example =
            serialize_training_example(d, mask, config, rng.bernoulli(0.5),
                                       QuestionStyle::raw);
        CHECK(example.num_masked_slots == mask.run_length + boundary_slots);
    }
}

TEST_CASE("serialize rejects masks that fall outside the dialog") {
    Dialog d = two_turn_dialog();
    CHECK_THROWS_AS(serialize_training_example(d, MaskSpec{2, 1}, PrepConfig{}, true,
                                               QuestionStyle::raw),
                    ValidationError);
    CHECK_THROWS_AS(serialize_training_example(d, MaskSpec{0, 3}, PrepConfig{}, true,
                                               QuestionStyle::raw),
                    ValidationError);
    CHECK_THROWS_AS(serialize_training_example(d, MaskSpec{0, 0}, PrepConfig{}, true,
                                               QuestionStyle::raw),
                    ValidationError);
}

// --- sentinel output parsing ---------------------------------------------------

TEST_CASE("parse_sentinel_output splits fills between ordered sentinels") {
    CHECK(parse_sentinel_output("<S0> Who proposed it? <S1> <S2> When? <S3>", 3) ==
          std::vector<std::string>{"Who proposed it?", "", "When?"});
    CHECK(parse_sentinel_output("<S0> Only question. <S1>", 1) ==
          std::vector<std::string>{"Only question."});
}

TEST_CASE("parse_sentinel_output tolerates a missing terminator") {
    CHECK(parse_sentinel_output("<S0> Trailing text", 1) ==
          std::vector<std::string>{"Trailing text"});
}

TEST_CASE("parse_sentinel_output rejects missing or out-of-order sentinels") {
    CHECK_THROWS_AS(parse_sentinel_output("<S0> text only", 2), MalformedGeneration);
    CHECK_THROWS_AS(parse_sentinel_output("<S1> b <S0> a", 2), MalformedGeneration);
    CHECK_THROWS_AS(parse_sentinel_output("no sentinels at all", 1), MalformedGeneration);
}

TEST_CASE("target text round-trips through parse_sentinel_output") {
    Rng rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Turn> turns;
        std::size_t n_turns = 1 + rng.uniform_below(4);
        for (std::size_t t = 0; t < n_turns; ++t) {
            std::size_t n_sents = 1 + rng.uniform_below(3);
            std::vector<std::string> sentences;
            for (std::size_t s = 0; s < n_sents; ++s) {
                sentences.push_back("Fact " + std::to_string(t) + "-" + std::to_string(s) + ".");
            }
            turns.push_back(
                make_turn("Question " + std::to_string(t) + "?", std::move(sentences)));
        }
        Dialog d = make_dialog("rt", std::move(turns));
        PrepConfig config;
        MaskSpec mask = sample_mask(d, config, rng);

        TrainingExample example =
            serialize_training_example(d, mask, config, true, QuestionStyle::raw);
        std::vector<std::string> fills =
            parse_sentinel_output(example.target_text, example.num_masked_slots);

        // Reconstruct the expected fills: masked questions in order, empty
        // strings at intra-answer boundaries.
        std::vector<std::string> expected;
        for (std::size_t t = 0; t < d.turns.size(); ++t) {
            bool masked = t >= mask.first_masked_turn &&
                          t < mask.first_masked_turn + mask.run_length;
            if (masked) expected.push_back(d.turns[t].question);
            for (std::size_t s = 1; s < d.turns[t].answer.sentences.size(); ++s) {
                expected.push_back("");
            }
        }
        CHECK(fills == expected);
    }
}

// --- training set assembly -----------------------------------------------------

namespace {
std::vector<Dialog> sibling_pair(const std::string& base, const std::string& raw_q,
                                 const std::string& rewritten_q) {
    Dialog raw = make_dialog(base + "::raw", {make_turn(raw_q, {"An answer."})}, "Topic");
    Dialog rewritten = make_dialog(
        base + "::rewritten",
        {make_turn(rewritten_q, {"An answer."}, QuestionType::rewritten)}, "Topic");
    return {raw, rewritten};
}
}  // namespace

TEST_CASE("build_training_set emits one example per variant group") {
    std::vector<Dialog> dialogs;
    for (int i = 0; i < 10; ++i) {
        auto pair = sibling_pair("conv-" + std::to_string(i), "who?", "Who exactly?");
        dialogs.insert(dialogs.end(), pair.begin(), pair.end());
    }
    PrepConfig config;
    std::vector<TrainingExample> examples = build_training_set(dialogs, config);
    CHECK(examples.size() == 10);
}

TEST_CASE("raw_only and rewritten_only pick the matching variant") {
    auto dialogs = sibling_pair("conv-9", "who?", "Who exactly?");
    PrepConfig config;
    config.title_keep_probability = 0.0;

    config.question_type_policy = QuestionTypePolicy::raw_only;
    std::vector<TrainingExample> raw = build_training_set(dialogs, config);
    REQUIRE(raw.size() == 1);
    CHECK(raw[0].target_text == "<S0> who? <S1>");
    CHECK(raw[0].input_text.rfind("Type: raw", 0) == 0);

    config.question_type_policy = QuestionTypePolicy::rewritten_only;
    std::vector<TrainingExample> rewritten = build_training_set(dialogs, config);
    REQUIRE(rewritten.size() == 1);
    CHECK(rewritten[0].target_text == "<S0> Who exactly? <S1>");
    CHECK(rewritten[0].input_text.rfind("Type: rewritten", 0) == 0);
}

TEST_CASE("raw_only skips groups that lack a raw variant") {
    Dialog rewritten_only = make_dialog(
        "solo::rewritten", {make_turn("Who exactly?", {"A."}, QuestionType::rewritten)});
    PrepConfig config;
    config.question_type_policy = QuestionTypePolicy::raw_only;
    CHECK(build_training_set({rewritten_only}, config).empty());
}

TEST_CASE("both_uniform splits variant choice roughly evenly") {
    std::vector<Dialog> dialogs;
    for (int i = 0; i < 100; ++i) {
        auto pair = sibling_pair("conv-" + std::to_string(i), "who?", "Who exactly?");
        dialogs.insert(dialogs.end(), pair.begin(), pair.end());
    }
    PrepConfig config;  // both_uniform
    config.rng_seed = 5;
    std::vector<TrainingExample> examples = build_training_set(dialogs, config);
    REQUIRE(examples.size() == 100);

    std::size_t raw_count = 0;
    for (const TrainingExample& example : examples) {
        if (example.input_text.rfind("Type: raw", 0) == 0) ++raw_count;
    }
    // 100 fair coin flips: [30, 70] fails with probability under 1e-4.
    CHECK(raw_count >= 30);
    CHECK(raw_count <= 70);
}

TEST_CASE("title keep probability 1 and 0 are honored exactly") {
    std::vector<Dialog> dialogs;
    for (int i = 0; i < 20; ++i) {
        dialogs.push_back(make_dialog("d-" + std::to_string(i),
                                      {make_turn("Q?", {"A."})}, "Topic"));
    }
    PrepConfig config;
    config.question_type_policy = QuestionTypePolicy::raw_only;

    config.title_keep_probability = 1.0;
    for (const TrainingExample& example : build_training_set(dialogs, config)) {
        CHECK(example.input_text.find("Title: Topic") != std::string::npos);
    }
    config.title_keep_probability = 0.0;
    for (const TrainingExample& example : build_training_set(dialogs, config)) {
        CHECK(example.input_text.find("Title:") == std::string::npos);
    }
}

TEST_CASE("build_training_set is deterministic and independent of variant order") {
    std::vector<Dialog> dialogs;
    for (int i = 0; i < 25; ++i) {
        auto pair = sibling_pair("conv-" + std::to_string(i), "who?", "Who exactly?");
        dialogs.insert(dialogs.end(), pair.begin(), pair.end());
    }
    PrepConfig config;
    config.rng_seed = 99;

    std::vector<TrainingExample> first = build_training_set(dialogs, config);
    std::vector<TrainingExample> second = build_training_set(dialogs, config);
    CHECK(first == second);

    // Reversing the input only reorders groups; each group's example is
    // unchanged because its randomness is keyed by (seed, base id).
    std::vector<Dialog> reversed(dialogs.rbegin(), dialogs.rend());
    std::vector<TrainingExample> from_reversed = build_training_set(reversed, config);
    REQUIRE(from_reversed.size() == first.size());
    std::multiset<std::string> a, b;
    for (const TrainingExample& e : first) a.insert(e.input_text + "\x1f" + e.target_text);
    for (const TrainingExample& e : from_reversed) {
        b.insert(e.input_text + "\x1f" + e.target_text);
    }
    CHECK(a == b);
}

TEST_CASE("changing the seed changes the sampled masks") {
    std::vector<Dialog> dialogs;
    for (int i = 0; i < 40; ++i) {
        std::vector<Turn> turns;
        for (int t = 0; t < 4; ++t) turns.push_back(make_turn("Q" + std::to_string(t) + "?", {"A."}));
        dialogs.push_back(make_dialog("d-" + std::to_string(i), std::move(turns)));
    }
    PrepConfig config;
    config.question_type_policy = QuestionTypePolicy::raw_only;
    config.rng_seed = 1;
    std::vector<TrainingExample> one = build_training_set(dialogs, config);
    config.rng_seed = 2;
    std::vector<TrainingExample> two = build_training_set(dialogs, config);
    CHECK(one != two);
}

// --- config ------------------------------------------------------------------

TEST_CASE("prep config parses JSON and keeps defaults for absent keys") {
    PrepConfig config = prep_config_from_json(
        R"({"N": 5, "title_keep_probability": 0.25, "question_type_policy": "raw_only", "rng_seed": 17})");
    CHECK(config.max_masked_run == 5);
    CHECK(config.title_keep_probability == doctest::Approx(0.25));
    CHECK(config.question_type_policy == QuestionTypePolicy::raw_only);
    CHECK(config.rng_seed == 17);

    PrepConfig defaults = prep_config_from_json("{}");
    CHECK(defaults.max_masked_run == 3);
    CHECK(defaults.title_keep_probability == doctest::Approx(0.5));
    CHECK(defaults.question_type_policy == QuestionTypePolicy::both_uniform);
}

TEST_CASE("prep config rejects out-of-range values") {
    CHECK_THROWS_AS(prep_config_from_json(R"({"N": 0})"), ConfigError);
    CHECK_THROWS_AS(prep_config_from_json(R"({"title_keep_probability": 1.5})"),
                    ConfigError);
    CHECK_THROWS_AS(prep_config_from_json(R"({"question_type_policy": "sideways"})"),
                    ConfigError);
    CHECK_THROWS_AS(prep_config_from_json("{nope"), ConfigError);
}

TEST_CASE("prep config round-trips through its JSON form") {
    PrepConfig config;
    config.max_masked_run = 4;
    config.title_keep_probability = 0.75;
    config.question_type_policy = QuestionTypePolicy::rewritten_only;
    config.rng_seed = 123;
    PrepConfig back = prep_config_from_json(prep_config_to_json(config));
    CHECK(back.max_masked_run == config.max_masked_run);
    CHECK(back.title_keep_probability == doctest::Approx(config.title_keep_probability));
    CHECK(back.question_type_policy == config.question_type_policy);
    CHECK(back.rng_seed == config.rng_seed);
}
