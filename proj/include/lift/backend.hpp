#pragma once

// Where rewrite proposals come from: the peephole rules, a chat-completion
// LLM endpoint, or a replay file of recorded responses.
//
// Replay file records are `block_addr \t stmt_index \t base64(raw_response)`,
// one per line; `#` lines and blank lines are ignored.

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lift/rewrite.hpp"
#include "lift/rules.hpp"

namespace lift {

class ReplayMiss : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// base64 (OpenSSL)
// ---------------------------------------------------------------------------

inline std::string base64_encode(std::string_view in) {
    std::string out(4 * ((in.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(in.data()), static_cast<int>(in.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::optional<std::string> base64_decode(std::string_view in) {
    if (in.size() % 4 != 0) return std::nullopt;
    if (in.empty()) return std::string{};
    std::string out(3 * in.size() / 4, '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(in.data()), static_cast<int>(in.size()));
    if (n < 0) return std::nullopt;
    std::size_t pad = 0;
    if (in.back() == '=') ++pad;
    if (in.size() > 1 && in[in.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class BackendKind : std::uint8_t { Rule, Llm, Replay };

inline std::string_view backend_name(BackendKind k) {
    switch (k) {
        case BackendKind::Rule: return "rule";
        case BackendKind::Llm: return "llm";
        case BackendKind::Replay: return "replay";
    }
    return "?";
}

inline BackendKind parse_backend_kind(std::string_view s) {
    if (s == "rule") return BackendKind::Rule;
    if (s == "llm") return BackendKind::Llm;
    if (s == "replay") return BackendKind::Replay;
    throw ConfigError("unknown backend '" + std::string(s) + "' (expected rule|llm|replay)");
}

struct BackendConfig {
    BackendKind kind = BackendKind::Rule;
    std::string endpoint;
    std::string model_name;
    std::string api_key_env = "LIFT_API_KEY";
    std::size_t max_parallel = 4;
    std::chrono::milliseconds timeout{30000};
    std::string replay_path;
};

// ---------------------------------------------------------------------------
// Replay store
// ---------------------------------------------------------------------------

struct ReplayRecord {
    std::string raw;
    std::size_t line = 0;
};

class ReplayStore {
public:
    ReplayStore() = default;

    static ReplayStore load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open replay file '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    static ReplayStore parse(std::string_view text, std::string file = "<memory>") {
        ReplayStore store;
        store.file_ = std::move(file);
        std::size_t line_no = 0;
        for (std::size_t start = 0; start < text.size();) {
            auto nl = text.find('\n', start);
            if (nl == std::string_view::npos) nl = text.size();
            auto line = detail::trim(text.substr(start, nl - start));
            start = nl + 1;
            ++line_no;
            if (line.empty() || line.front() == '#') continue;
            auto t1 = line.find('\t');
            auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
            if (t2 == std::string_view::npos)
                throw ConfigError(store.file_ + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
            auto addr = parse_u64(line.substr(0, t1));
            auto idx = parse_u64(line.substr(t1 + 1, t2 - t1 - 1));
            auto raw = base64_decode(detail::trim(line.substr(t2 + 1)));
            if (!addr || !idx || !raw)
                throw ConfigError(store.file_ + ":" + std::to_string(line_no) + ": malformed replay record");
            store.records_[{*addr, static_cast<std::size_t>(*idx)}] = {*raw, line_no};
        }
        return store;
    }

    const ReplayRecord& lookup(std::uint64_t addr, std::size_t idx) const {
        auto it = records_.find({addr, idx});
        if (it == records_.end())
            throw ReplayMiss("no recorded response for " + hex_addr(addr) + " stmt " + std::to_string(idx));
        return it->second;
    }

    const std::string& file() const { return file_; }
    std::size_t size() const { return records_.size(); }

    static std::string format_record(std::uint64_t addr, std::size_t idx, std::string_view raw) {
        return hex_addr(addr) + "\t" + std::to_string(idx) + "\t" + base64_encode(raw) + "\n";
    }

private:
    static std::optional<std::uint64_t> parse_u64(std::string_view s) {
        s = detail::trim(s);
        int base = 10;
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
            s.remove_prefix(2);
            base = 16;
        }
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
        if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
        return v;
    }

    std::string file_;
    std::map<std::pair<std::uint64_t, std::size_t>, ReplayRecord> records_;
};

// ---------------------------------------------------------------------------
// Chat-completion transport
// ---------------------------------------------------------------------------

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions
};

inline Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json chat_request_body(const std::string& model, std::string_view prompt) {
    return {
        {"model", model},
        {"temperature", 0},
        {"messages",
         nlohmann::json::array({{{"role", "system"}, {"content", std::string(kSystemMessage)}},
                                {{"role", "user"}, {"content", std::string(prompt)}}})},
    };
}

/// First choice text of a chat-completion (or legacy completion) response.
inline std::string first_choice_text(const nlohmann::json& resp) {
    const auto& choice = resp.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
}

class LlmClient {
public:
    LlmClient(BackendConfig cfg, std::string api_key) : cfg_(std::move(cfg)), key_(std::move(api_key)) {
        ep_ = split_endpoint(cfg_.endpoint);
    }

    /// Returns the raw model text or throws TransportError.
    std::string complete(std::string_view prompt) const {
        httplib::Client cli(ep_.base);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout).count();
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout).count() % 1000000;
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
        auto body = chat_request_body(cfg_.model_name, prompt).dump();
        auto res = cli.Post(ep_.path, headers, body, "application/json");
        if (!res) throw TransportError(httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("HTTP " + std::to_string(res->status));
        try {
            return first_choice_text(nlohmann::json::parse(res->body));
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed response: ") + e.what());
        }
    }

private:
    BackendConfig cfg_;
    std::string key_;
    Endpoint ep_;
};

// ---------------------------------------------------------------------------
// Backend
// ---------------------------------------------------------------------------

class RewriteBackend {
public:
    /// Validates the configuration; throws ConfigError.
    explicit RewriteBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.max_parallel == 0) cfg_.max_parallel = 1;
        switch (cfg_.kind) {
            case BackendKind::Rule:
                break;
            case BackendKind::Llm: {
                if (cfg_.endpoint.empty()) throw ConfigError("llm backend requires an endpoint");
                if (cfg_.model_name.empty()) throw ConfigError("llm backend requires a model name");
                const char* key = std::getenv(cfg_.api_key_env.c_str());
                if (!key || !*key) throw ConfigError("environment variable " + cfg_.api_key_env + " is not set");
                client_.emplace(cfg_, key);
                break;
            }
            case BackendKind::Replay:
                if (cfg_.replay_path.empty()) throw ConfigError("replay backend requires a replay file");
                replay_ = ReplayStore::load(cfg_.replay_path);
                break;
        }
    }

    RewriteBackend(BackendConfig cfg, ReplayStore store) : cfg_(std::move(cfg)), replay_(std::move(store)) {
        cfg_.kind = BackendKind::Replay;
    }

    const BackendConfig& config() const { return cfg_; }

    /// One proposal. Transport failures become RejectedSyntax("backend-error:
    /// ...") so the original statement is kept. Throws ReplayMiss.
    RewriteProposal request(const RewriteCandidate& c) const {
        switch (cfg_.kind) {
            case BackendKind::Rule: {
                if (auto p = rule_rewrite(c)) return *p;
                RewriteProposal none;
                none.provenance = Provenance::rule("none");
                none.status = ProposalStatus::RejectedContract;
                none.reason = "no rule matched";
                return none;
            }
            case BackendKind::Llm: {
                try {
                    auto raw = client_->complete(build_prompt(c));
                    return sanitize(raw, c, Provenance::llm(raw));
                } catch (const TransportError& e) {
                    RewriteProposal p;
                    p.provenance = Provenance::llm({});
                    p.status = ProposalStatus::RejectedSyntax;
                    p.reason = std::string("backend-error: ") + e.what();
                    return p;
                }
            }
            case BackendKind::Replay: {
                const auto& rec = replay_.lookup(c.block_addr, c.stmt_index);
                return sanitize(rec.raw, c, Provenance::replay(rec.raw, replay_.file(), rec.line));
            }
        }
        return {};
    }

    /// Proposals for all candidates, in input order. LLM requests run on up
    /// to max_parallel threads. A replay miss becomes a RejectedSyntax proposal.
    std::vector<RewriteProposal> request_all(const std::vector<RewriteCandidate>& cands) const {
        std::vector<RewriteProposal> out(cands.size());
        auto one = [&](std::size_t i) {
            try {
                out[i] = request(cands[i]);
            } catch (const ReplayMiss& e) {
                out[i].provenance = Provenance::replay({}, replay_.file(), 0);
                out[i].status = ProposalStatus::RejectedSyntax;
                out[i].reason = std::string("replay-miss: ") + e.what();
            }
        };
        const std::size_t workers = cfg_.kind == BackendKind::Llm ? std::min(cfg_.max_parallel, cands.size()) : 0;
        if (workers <= 1) {
            for (std::size_t i = 0; i < cands.size(); ++i) one(i);
            return out;
        }
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < cands.size();) one(i);
            });
        for (auto& t : pool) t.join();
        return out;
    }

private:
    BackendConfig cfg_;
    std::optional<LlmClient> client_;
    ReplayStore replay_;
};

inline RewriteProposal backend_request(const RewriteCandidate& c, const BackendConfig& cfg) {
    return RewriteBackend(cfg).request(c);
}

}  // namespace lift
