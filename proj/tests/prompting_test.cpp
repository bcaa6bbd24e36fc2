// Copyright 2026  aqeval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aqeval/prompting.hpp"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <charconv>
#include <cmath>
#include <set>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/rng.hpp"
#include "test_util.hpp"

using namespace aqeval;
namespace mp = boost::multiprecision;
using Dec = mp::number<mp::cpp_dec_float<80>>;

using aqeval::testing::golden_record;

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Decimal reference: take the shortest round-trip decimal of v, scale by
// 100 in exact decimal arithmetic and round half to even.
std::string decimal_oracle(double v) {
  const Dec x(shortest(v));
  const Dec scaled = mp::abs(x) * 100;
  Dec whole = mp::floor(scaled);
  const Dec frac = scaled - whole;
  mp::cpp_int n = whole.convert_to<mp::cpp_int>();
  if (frac > Dec("0.5") || (frac == Dec("0.5") && n % 2 == 1)) ++n;
  std::string digits = n.str();
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  std::string out = digits.substr(0, digits.size() - 2) + "." + digits.substr(digits.size() - 2);
  if (x < 0 && n != 0) out.insert(out.begin(), '-');
  return out;
}

// Exact decimal expansion of a binary64 value.
Dec exact_value(double v) {
  int exp = 0;
  const double m = std::frexp(v, &exp);
  const auto mant = static_cast<long long>(std::ldexp(m, 53));
  Dec out(mant);
  const int shift = exp - 53;
  for (int i = 0; i < std::abs(shift); ++i) out = shift > 0 ? Dec(out * 2) : Dec(out / 2);
  return out;
}

const char* kWords[] = {"rate",  "the",   "clarity", "of",    "this", "speech",
                        "noise", "score", "calm",    "voice", "hiss", "please"};

std::string random_sentence(Rng& rng, std::size_t max_words) {
  std::string s;
  const auto n = 1 + rng.below(max_words);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += kWords[rng.below(std::size(kWords))];
  }
  return s + ".";
}

}  // namespace

TEST(FormatScore, Examples) {
  EXPECT_EQ(format_score(4.2), "4.20");
  EXPECT_EQ(format_score(84), "84.00");
  EXPECT_EQ(format_score(0.0), "0.00");
  EXPECT_EQ(format_score(-0.001), "0.00");
  EXPECT_EQ(format_score(-1.5), "-1.50");
  EXPECT_EQ(format_score(9.999), "10.00");
  EXPECT_EQ(format_score(1e20), "100000000000000000000.00");
  EXPECT_THROW(format_score(std::nan("")), std::domain_error);
  EXPECT_THROW(format_score(INFINITY), std::domain_error);
}

TEST(FormatScore, HalfwayCasesRoundToEvenOnShortestDecimal) {
  EXPECT_EQ(format_score(2.675), "2.68");
  EXPECT_EQ(format_score(2.665), "2.66");
  EXPECT_EQ(format_score(0.125), "0.12");
  EXPECT_EQ(format_score(0.135), "0.14");
  // The stored binary value of 2.675 lies just below the halfway point; the
  // rounding is defined on the decimal the user wrote, not on that value.
  EXPECT_LT(exact_value(2.675), Dec("2.675"));
  EXPECT_EQ(decimal_oracle(2.675), "2.68");
}

TEST(FormatScore, MatchesDecimalOracle) {
  Rng rng(13);
  for (int i = 0; i < 5000; ++i) {
    // Mix of arbitrary doubles and exact three-decimal ties.
    const double v = i % 2 ? rng.uniform(-500, 500)
                           : static_cast<double>(static_cast<long long>(rng.below(2000000)) - 1000000) /
                                 1000.0;
    ASSERT_EQ(format_score(v), decimal_oracle(v)) << shortest(v);
  }
}

TEST(ExtractScore, GrammarRules) {
  const auto s10 = CalibrationScale::make(1, 10);
  const auto s5 = CalibrationScale::make(1, 5);
  EXPECT_EQ(extract_score("8.40", s10), 8.4);
  EXPECT_EQ(extract_score("Score: 4.2/5", s5), 4.2);
  EXPECT_FALSE(extract_score("The audio is pleasant.", s5));
  // Keyword wins over an earlier standalone number; the last keyword hit counts.
  EXPECT_EQ(extract_score("Of 3 clips this one is best. Rating: 4", s5), 4.0);
  EXPECT_EQ(extract_score("score 2, no wait, final score 3.5", s5), 3.5);
  // Fraction rule needs the scale maximum as denominator.
  EXPECT_EQ(extract_score("I'd give it 7/10 overall", s10), 7.0);
  EXPECT_EQ(extract_score("1/2 of the clip is noisy, I'd say 3", s5), 3.0);
  // First in-range standalone number.
  EXPECT_EQ(extract_score("After 30 seconds it settles; 4 seems right", s5), 4.0);
  // Out of range is a failure, never clamped.
  EXPECT_FALSE(extract_score("Score: 7", s5));
  EXPECT_FALSE(extract_score("12", s10));
}

TEST(ExtractScore, RoundTripsFormattedScores) {
  Rng rng(42);
  const auto scale = CalibrationScale::make(0, 100);
  for (int i = 0; i < 10000; ++i) {
    const double s = rng.uniform(0, 100);
    const auto got = extract_score(format_score(s), scale);
    ASSERT_TRUE(got);
    EXPECT_EQ(*got, std::nearbyint(s * 100.0) / 100.0) << shortest(s);
  }
}

TEST(Render, SegmentsForPlainDescription) {
  auto r = golden_record();
  r.task.description = "Rate the overall quality.";
  r.additional_instruction.reset();
  const auto p = render(r);
  ASSERT_EQ(p.segments.size(), 3u);
  EXPECT_EQ(p.segments[0].text, "«USER»Rate the overall quality.");
  EXPECT_EQ(p.segments[1].kind, SegmentKind::kAudio);
  EXPECT_EQ(p.segments[2].text, "Now, please predict the score of this waveform.");
  EXPECT_EQ(p.target_text, "4.20");
}

TEST(Render, PlaceholderSplitsTheDescription) {
  const auto p = render(golden_record());
  EXPECT_EQ(p.segments[0].text, "«USER»Listen to the recording");
  EXPECT_EQ(p.segments[2].text,
            "and rate how clean it is. Use a scale from 1 to 5. Ignore any clipping. Now, please "
            "predict the score of this waveform.");
}

TEST(Render, GoldenFile) {
  const auto p = render(golden_record());
  const std::string got = prompt_to_json(p).dump(2) + "\n" + p.full_sequence() + "\n";
  const auto golden = std::filesystem::path(AQEVAL_SOURCE_DIR) / "tests/golden/render_golden.txt";
  EXPECT_EQ(got, read_file(golden));
  EXPECT_EQ(render(golden_record()), p);
}

TEST(TargetSpan, SlicesExactlyTheTarget) {
  const auto p = render(golden_record());
  const auto span = target_span(p);
  EXPECT_EQ(span.length(), 4u);
  EXPECT_EQ(p.full_sequence().substr(span.start, span.length()), "4.20");
  EXPECT_EQ(span.end, p.full_sequence().size());
  EXPECT_EQ(span.start, p.context_text().size());

  auto without = golden_record();
  without.additional_instruction.reset();
  EXPECT_EQ(target_span(render(without)).length(), 4u);
}

TEST(TargetSpan, HoldsForEveryMiniCorpusRecord) {
  const auto recs = aqeval::testing::mini_records();
  ASSERT_GE(recs.size(), 50u);
  for (const auto& r : recs) {
    const auto p = render(r);
    const auto span = target_span(p);
    ASSERT_EQ(p.full_sequence().substr(span.start, span.length()), p.target_text) << r.id;
    ASSERT_EQ(extract_score(p.target_text, r.scale()), std::nearbyint(r.score * 100) / 100) << r.id;
  }
}

TEST(TargetSpan, ComplementHasNoDigitsForNumeralFreeText) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    auto r = golden_record();
    r.task.description = random_sentence(rng, 8);
    if (rng.below(2)) r.task.description += " <audio> " + random_sentence(rng, 5);
    r.additional_instruction.reset();
    if (rng.below(2)) r.additional_instruction = random_sentence(rng, 4);
    r.score = rng.uniform(1, 5);
    const auto p = render(r);
    const auto full = p.full_sequence();
    const auto span = target_span(p);
    for (std::size_t k = 0; k < full.size(); ++k) {
      if (k >= span.start && k < span.end) continue;
      ASSERT_FALSE(std::isdigit(static_cast<unsigned char>(full[k]))) << full;
    }
  }
}

TEST(Render, InjectiveOnDistinctInputs) {
  Rng rng(12);
  std::set<std::tuple<std::string, std::string, std::string>> inputs;
  std::set<std::string> outputs;
  for (int i = 0; i < 2000; ++i) {
    auto r = golden_record();
    r.task.description = random_sentence(rng, 4);
    r.additional_instruction.reset();
    if (rng.below(2)) r.additional_instruction = random_sentence(rng, 2);
    r.score = static_cast<double>(1 + rng.below(400)) / 100.0;
    const auto p = render(r);
    if (inputs.insert({r.task.description, r.additional_instruction.value_or("<none>"),
                       p.target_text})
            .second) {
      ASSERT_TRUE(outputs.insert(p.full_sequence()).second) << p.full_sequence();
    }
  }
}

TEST(Render, CustomMarkersApply) {
  Markers m;
  m.user = "<|user|>";
  m.model = "<|assistant|>";
  m.elicitation = "Score?";
  const auto p = render(golden_record(), m);
  const auto full = p.full_sequence();
  EXPECT_EQ(full.rfind("<|user|>", 0), 0u);
  EXPECT_NE(full.find("Score?<|assistant|>4.20"), std::string::npos);
}

TEST(PromptsFile, RoundTrip) {
  aqeval::testing::TempDir dir;
  std::vector<RenderedPrompt> prompts;
  for (const auto& r : aqeval::testing::mini_records()) prompts.push_back(render(r));
  write_prompts(prompts, dir / "prompts.jsonl");
  const auto back = read_prompts(dir / "prompts.jsonl");
  ASSERT_EQ(back.size(), prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    EXPECT_EQ(back[i].full_sequence(), prompts[i].full_sequence());
    EXPECT_EQ(std::filesystem::weakly_canonical(back[i].audio().path),
              std::filesystem::weakly_canonical(prompts[i].audio().path));
  }
}
