// Comment-dump ingestion and text normalization.
//
// Input dumps are newline-delimited JSON objects (optionally gzip-compressed)
// carrying at least a "body" string, or plain text with one comment per line.
// Normalized output groups token sentences by comment so that resampling can
// operate on whole comments.

#ifndef CBIAS_CORPUS_H_
#define CBIAS_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cbias {

enum class InputFormat { kJsonl, kJsonlGzip, kPlainText };

InputFormat parse_input_format(std::string_view name);
std::string_view to_string(InputFormat format);

struct CommentRecord {
    std::string id;
    std::string body;
    std::optional<std::string> subreddit;
    std::optional<std::int64_t> created_utc;
    std::optional<std::string> author;
};

struct IngestStats {
    std::size_t lines = 0;          // non-blank input lines
    std::size_t records = 0;        // records yielded
    std::size_t malformed = 0;      // lines that are not valid JSON objects
    std::size_t missing_body = 0;   // valid objects without a string "body"
};

// Streams CommentRecords from a dump in file order. Malformed lines and
// records without a usable body are skipped and counted. When the stream is
// exhausted, more than one malformed line amounting to over 10% of the lines
// raises FormatError.
class CommentReader {
public:
    CommentReader(const std::filesystem::path &path, InputFormat format);
    ~CommentReader();
    CommentReader(const CommentReader &) = delete;
    CommentReader &operator=(const CommentReader &) = delete;

    // Returns false at end of input.
    bool next(CommentRecord &record);
    const IngestStats &stats() const { return stats_; }

private:
    class LineSource;
    bool parse_json_line(const std::string &line, CommentRecord &record);
    std::string unique_id(std::string candidate);

    std::unique_ptr<LineSource> source_;
    InputFormat format_;
    IngestStats stats_;
    std::size_t line_number_ = 0;
    std::unordered_set<std::string> seen_ids_;
    bool finished_ = false;
};

// Reads a whole dump into memory.
std::vector<CommentRecord> ingest(const std::filesystem::path &path,
                                  InputFormat format,
                                  IngestStats *stats = nullptr);

using Sentence = std::vector<std::string>;

// Lowercases, splits into sentences on . ! ? and newline, replaces every
// character outside [a-z0-9'] with a space and splits on whitespace. Empty
// sentences are dropped.
std::vector<Sentence> preprocess(std::string_view text);

struct CorpusStats {
    std::size_t comments = 0;
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::size_t unique_tokens = 0;
};

// Normalized token sentences grouped by comment, in ingestion order.
// Immutable once built.
class TokenizedCorpus {
public:
    class Builder {
    public:
        void add_comment(std::vector<Sentence> sentences);
        TokenizedCorpus build() &&;

    private:
        std::vector<Sentence> sentences_;
        std::vector<std::size_t> offsets_{0};
    };

    TokenizedCorpus() : offsets_{0} {}

    static TokenizedCorpus from_records(std::span<const CommentRecord> records);
    static TokenizedCorpus load(const std::filesystem::path &path,
                                InputFormat format,
                                IngestStats *stats = nullptr);

    std::size_t comment_count() const { return offsets_.size() - 1; }
    bool empty() const { return comment_count() == 0; }
    std::span<const Sentence> comment(std::size_t i) const;
    const std::vector<Sentence> &sentences() const { return sentences_; }
    CorpusStats stats() const;

private:
    std::vector<Sentence> sentences_;
    std::vector<std::size_t> offsets_;  // comment i = [offsets_[i], offsets_[i+1])
};

// Samples floor(fraction * N) whole comments uniformly without replacement;
// the sample keeps corpus order.
// fraction must lie in (0, 1].
TokenizedCorpus bootstrap_sample(const TokenizedCorpus &corpus, double fraction,
                                 std::uint64_t seed);

std::string stats_json(const CorpusStats &stats, const IngestStats *ingest = nullptr);

}  // namespace cbias

#endif  // CBIAS_CORPUS_H_
