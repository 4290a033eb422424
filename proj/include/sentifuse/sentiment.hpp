#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sentifuse/ingest.hpp"

namespace sentifuse::sentiment {

enum class Source { Lexicon, External };

struct SentimentScore {
    double positive = 0;
    double negative = 0;
    double neutral = 0;
    std::optional<double> compound; // lexicon scorer only, in [-1, 1]
    Source source = Source::Lexicon;
};

/// Valence lexicon plus negator and booster word lists.
struct Lexicon {
    std::unordered_map<std::string, double> entries; // token -> valence [-4, 4]
    std::unordered_set<std::string> negators;
    std::unordered_map<std::string, double> boosters; // token -> increment

    /// TSV `token<TAB>valence`; optional sections started by lines
    /// `#NEGATORS` (one token per line) and `#BOOSTERS` (token<TAB>increment).
    static Lexicon load(const std::string& path);
    static Lexicon parse(const std::string& text, const std::string& origin);

    /// Compact finance-flavored default so the scorer works out of the box.
    static const Lexicon& builtin();

    void validate() const;
};

/// Lowercased tokens, split on whitespace (including the common Unicode
/// spaces), leading/trailing ASCII punctuation stripped.
std::vector<std::string> tokenize(std::string_view text);

/// Rule-based scorer: lexicon match with a 3-token negation window, booster
/// scaling by (1 + increment), compound = S / sqrt(S^2 + 15). Positive /
/// negative / neutral are proportions of adjusted-valence mass (unmatched
/// tokens contribute unit neutral mass); they sum to 1.
SentimentScore lexicon_score(std::string_view text, const Lexicon& lexicon);

/// Numerically stable softmax over three logits; output sums to 1.
std::array<double, 3> softmax_normalize(const std::array<double, 3>& logits);

struct ScoredPost {
    ingest::PostRecord post;
    SentimentScore score;
};

using LogitMap = std::unordered_map<std::string, std::array<double, 3>>;

struct AttachResult {
    std::vector<ScoredPost> posts;
    std::size_t ignored_scores = 0; // score ids with no matching post
};

/// Pairs each post with softmax-normalized externally computed logits.
/// Posts with no score entry raise an error listing every missing id.
AttachResult attach_external_scores(const std::vector<ingest::PostRecord>& posts,
                                    const LogitMap& scores);

/// JSONL `{"id": ..., "logits": [positive, negative, neutral]}`.
LogitMap load_scores_jsonl(const std::string& path);
LogitMap parse_scores_jsonl(const std::string& text, const std::string& origin);

/// Convenience: lexicon_score over a post sequence, order preserved.
std::vector<ScoredPost> score_with_lexicon(const std::vector<ingest::PostRecord>& posts,
                                           const Lexicon& lexicon);

/// Reduced scored-post records handed from the score stage to featurize:
/// JSONL {"id", "date", "positive", "negative", "neutral", "compound"?,
/// "source"}. Post text/author are not carried along.
std::string serialize_scored_posts(const std::vector<ScoredPost>& posts);
std::vector<ScoredPost> parse_scored_posts(const std::string& text,
                                           const std::string& origin);
std::vector<ScoredPost> load_scored_posts(const std::string& path);

} // namespace sentifuse::sentiment
