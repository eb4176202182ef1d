// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tokenprobe Authors

#include "tokenprobe/records.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include "json.hpp"
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "tokenprobe/errors.hpp"

namespace tokenprobe {

namespace {

using json = nlohmann::json;

constexpr double kMassSlack = 1e-6;
constexpr double kDroppableTail = 1e-12;
constexpr char kTailText[] = "<other>";

// Reports rethrown from lower layers keep their type and gain a line number.
template <typename E>
[[noreturn]] void rethrow_at(const E& e, std::size_t line) {
    throw E(e.message(), line);
}

std::int64_t require_int(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
    if (!it->is_number_integer())
        throw ParseError(std::string("field \"") + key + "\" must be an integer", line);
    return it->get<std::int64_t>();
}

double require_number(const json& v, std::size_t line) {
    if (!v.is_number()) throw ParseError("expected a number, got " + v.dump(), line);
    return v.get<double>();
}

}  // namespace

TokenDistribution lump_tail(std::span<const TopKEntry> topk, std::int64_t selected,
                            std::size_t position) {
    if (topk.empty()) throw EmptySupport("empty top-k list");

    std::vector<double> log_probs;
    std::vector<std::int64_t> ids;
    std::vector<std::string> texts;
    log_probs.reserve(topk.size() + 1);
    ids.reserve(topk.size() + 1);
    bool have_texts = false;
    std::optional<std::size_t> selected_index;
    for (std::size_t i = 0; i < topk.size(); ++i) {
        const auto& e = topk[i];
        if (std::isnan(e.logprob) || e.logprob > kMassSlack)
            throw MassOverflowError("top-k log-probability out of range: " +
                                    std::to_string(e.logprob));
        log_probs.push_back(e.logprob);
        ids.push_back(e.token_id);
        texts.push_back(e.text);
        have_texts = have_texts || !e.text.empty();
        if (e.token_id == selected && !selected_index) selected_index = i;
    }
    if (!selected_index)
        throw SelectionMissingError("selected token " + std::to_string(selected) +
                                    " is not in the top-k list");

    const double mass = logsumexp(log_probs);
    if (mass > kMassSlack)
        throw MassOverflowError("top-k mass exceeds 1 (log mass " + std::to_string(mass) + ")");

    const double residual = mass < 0.0 ? -std::expm1(mass) : 0.0;
    if (residual < kDroppableTail) {
        for (auto& lp : log_probs) lp -= mass;
        if (!have_texts) texts.clear();
        return TokenDistribution(position, std::move(log_probs), std::move(ids), *selected_index,
                                 Coverage::Full, std::nullopt, std::move(texts));
    }

    const std::size_t tail = log_probs.size();
    log_probs.push_back(std::log(residual));
    ids.push_back(kTailTokenId);
    texts.emplace_back(kTailText);
    if (!have_texts) texts.clear();
    return TokenDistribution(position, std::move(log_probs), std::move(ids), *selected_index,
                             Coverage::TopKLumped, tail, std::move(texts));
}

// --- side buffer -----------------------------------------------------------

std::shared_ptr<const LogitBuffer> LogitBuffer::open(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) throw Error("cannot open side buffer " + path.string() + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd, &st) != 0) {
        ::close(fd);
        throw Error("cannot stat side buffer " + path.string());
    }
    std::shared_ptr<LogitBuffer> buffer(new LogitBuffer);
    buffer->size_ = static_cast<std::size_t>(st.st_size);
    if (buffer->size_ > 0) {
        void* p = ::mmap(nullptr, buffer->size_, PROT_READ, MAP_PRIVATE, fd, 0);
        if (p == MAP_FAILED) {
            ::close(fd);
            throw Error("cannot map side buffer " + path.string());
        }
        buffer->data_ = p;
    }
    ::close(fd);
    return buffer;
}

LogitBuffer::~LogitBuffer() {
    if (data_) ::munmap(const_cast<void*>(data_), size_);
}

ScoreView LogitBuffer::slice(std::size_t offset, std::size_t count) const {
    if (offset % alignof(double) != 0)
        throw ParseError("side buffer offset " + std::to_string(offset) + " is not 8-byte aligned");
    if (count > (size_ - std::min(offset, size_)) / sizeof(double))
        throw ParseError("side buffer slice [" + std::to_string(offset) + ", +" +
                         std::to_string(count) + " doubles) exceeds buffer of " +
                         std::to_string(size_) + " bytes");
    const auto* base = static_cast<const double*>(data_) + offset / sizeof(double);
    return ScoreView(shared_from_this(), std::span<const double>(base, count));
}

// --- parsing ---------------------------------------------------------------

ParsedRecord parse_record(std::string_view line, std::size_t line_number,
                          const ParseOptions& options) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_number);
    }
    if (!obj.is_object()) throw ParseError("record is not an object", line_number);

    const auto pos = require_int(obj, "pos", line_number);
    const auto token_id = require_int(obj, "token_id", line_number);
    if (pos < 0) throw ParseError("negative position", line_number);
    auto text_it = obj.find("token");
    if (text_it == obj.end() || !text_it->is_string())
        throw ParseError("field \"token\" must be a string", line_number);
    std::string token_text = text_it->get<std::string>();

    const int payloads = int(obj.contains("logits")) + int(obj.contains("top_logprobs")) +
                         int(obj.contains("logits_ref"));
    if (payloads != 1)
        throw ParseError("record needs exactly one of \"logits\", \"top_logprobs\", \"logits_ref\"",
                         line_number);

    const auto position = static_cast<std::size_t>(pos);

    try {
        if (auto it = obj.find("top_logprobs"); it != obj.end()) {
            if (!it->is_array() || it->empty())
                throw ParseError("\"top_logprobs\" must be a non-empty array", line_number);
            std::vector<TopKEntry> entries;
            entries.reserve(it->size());
            std::unordered_set<std::int64_t> seen;
            for (const auto& pair : *it) {
                if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer())
                    throw ParseError("top_logprobs entries must be [token_id, logprob]", line_number);
                TopKEntry e{pair[0].get<std::int64_t>(), require_number(pair[1], line_number), {}};
                if (!entries.empty() && e.logprob > entries.back().logprob)
                    throw ParseError("top_logprobs must be non-increasing", line_number);
                if (!seen.insert(e.token_id).second)
                    throw ParseError("duplicate token id " + std::to_string(e.token_id), line_number);
                entries.push_back(std::move(e));
            }
            if (!seen.count(token_id))
                throw SelectionMissingError(
                    "selected token " + std::to_string(token_id) + " not in top_logprobs",
                    line_number);
            return {lump_tail(entries, token_id, position), std::move(token_text)};
        }

        ScoreView scores;
        if (auto it = obj.find("logits"); it != obj.end()) {
            if (!it->is_array()) throw ParseError("\"logits\" must be an array", line_number);
            std::vector<double> values;
            values.reserve(it->size());
            for (const auto& v : *it) values.push_back(require_number(v, line_number));
            scores = ScoreView::adopt(std::move(values));
        } else {
            const auto& ref = obj["logits_ref"];
            if (!ref.is_object()) throw ParseError("\"logits_ref\" must be an object", line_number);
            if (!options.side_buffer)
                throw ParseError("\"logits_ref\" used but no side buffer was supplied", line_number);
            const auto offset = require_int(ref, "offset", line_number);
            const auto count = require_int(ref, "count", line_number);
            if (offset < 0 || count < 0) throw ParseError("negative logits_ref field", line_number);
            scores = options.side_buffer->slice(static_cast<std::size_t>(offset),
                                                static_cast<std::size_t>(count));
        }
        if (token_id < 0 || static_cast<std::size_t>(token_id) >= scores.size())
            throw SelectionMissingError("selected token " + std::to_string(token_id) +
                                            " outside vocabulary of " +
                                            std::to_string(scores.size()),
                                        line_number);
        return {normalize_logits(std::move(scores), static_cast<std::size_t>(token_id), position),
                std::move(token_text)};
    } catch (const Error& e) {
        if (e.line()) throw;
        if (auto* p = dynamic_cast<const InvalidLogits*>(&e)) rethrow_at(*p, line_number);
        if (auto* p = dynamic_cast<const EmptySupport*>(&e)) rethrow_at(*p, line_number);
        if (auto* p = dynamic_cast<const MassOverflowError*>(&e)) rethrow_at(*p, line_number);
        if (auto* p = dynamic_cast<const SelectionMissingError*>(&e)) rethrow_at(*p, line_number);
        throw ParseError(e.message(), line_number);
    }
}

ParsedSequence parse_records(std::istream& in, const ParseOptions& options) {
    ParsedSequence out;
    std::string line;
    std::size_t line_number = 0;
    std::optional<std::size_t> previous;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto record = parse_record(line, line_number, options);
        const std::size_t pos = record.distribution.position();
        if (options.contiguous_positions) {
            const std::size_t expected = previous ? *previous + 1 : 0;
            if (pos != expected)
                throw SequenceGapError("expected position " + std::to_string(expected) +
                                           ", found " + std::to_string(pos),
                                       line_number);
        }
        previous = pos;
        out.distributions.push_back(std::move(record.distribution));
        out.token_texts.push_back(std::move(record.token_text));
    }
    return out;
}

ParsedSequence parse_records(std::string_view text, const ParseOptions& options) {
    std::istringstream in{std::string(text)};
    return parse_records(in, options);
}

void write_records(std::ostream& out, std::span<const TokenDistribution> distributions,
                   std::span<const std::string> token_texts) {
    if (distributions.size() != token_texts.size())
        throw AlignmentError("token texts not aligned with distributions");
    // JSON has no infinities; anything this negative exponentiates to 0.
    auto finite = [](double v) { return std::isfinite(v) ? v : -1e300; };
    for (std::size_t i = 0; i < distributions.size(); ++i) {
        const auto& d = distributions[i];
        json rec;
        rec["pos"] = d.position();
        rec["token_id"] = d.selected_token_id();
        rec["token"] = token_texts[i];
        if (d.coverage() == Coverage::TopKLumped || d.has_explicit_ids()) {
            json top = json::array();
            for (std::size_t j = 0; j < d.support_size(); ++j) {
                if (d.tail_index() == j) continue;
                top.push_back({d.token_id(j), finite(d.log_probs()[j])});
            }
            rec["top_logprobs"] = std::move(top);
        } else {
            const auto raw = d.raw_logits();
            const auto src = raw.empty() ? d.log_probs() : raw;
            json logits = json::array();
            for (double v : src) logits.push_back(finite(v));
            rec["logits"] = std::move(logits);
        }
        out << rec.dump() << '\n';
    }
}

}  // namespace tokenprobe
