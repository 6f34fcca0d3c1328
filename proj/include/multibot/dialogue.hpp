#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "multibot/tbs.hpp"
#include "multibot/types.hpp"
#include "multibot/world.hpp"

namespace multibot {

enum class Category { wake, navigate, follow, inspect, patrol };

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view s);

enum class Slot { destination, route, area, leader, robot };

std::string_view to_string(Slot s);
std::optional<Slot> parse_slot(std::string_view s);

/// Action skeleton of a training pair. `loc` names the slot that supplies the
/// location; the leader always comes from the leader slot.
struct TbsTemplate {
    ActionKind action = ActionKind::HALT;
    std::optional<Slot> loc;
    std::optional<ObjectClass> obj;

    friend bool operator==(const TbsTemplate&, const TbsTemplate&) = default;
};

struct TrainingPair {
    int id = 0;
    std::string utterance;
    Category category = Category::wake;
    std::string robot_binding; // explicit-name | addressee-context | implicit:<id> | broadcast
    std::string response_template;
    std::optional<TbsTemplate> tbs_template;
    std::set<Slot> required_slots;

    /// Robot id named by an implicit binding.
    std::optional<std::string> implicit_robot() const;

    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

using Corpus = std::vector<TrainingPair>;

/// JSONL, one pair per line. Throws ConfigError with the line number.
Corpus parse_corpus(std::string_view text);
Corpus load_corpus_file(const std::string& path);
std::string dump_corpus(const Corpus& corpus);

/// Checks pair invariants against a roster; returns the first problem.
std::optional<std::string> check_corpus(const Corpus& corpus, const Roster& roster);

/// Lowercase, punctuation stripped, split on whitespace. `_` and `-` separate words.
std::vector<std::string> normalize(std::string_view text);

struct Ranked {
    int pair_id = 0;
    double score = 0.0;
};

/// Relevance model used by the dialogue manager.
class Scorer {
public:
    virtual ~Scorer() = default;
    /// All pairs, best first; equal scores ordered by ascending pair id.
    virtual std::vector<Ranked> rank(const std::vector<std::string>& tokens) const = 0;
};

/// Cosine between TF-IDF vectors. tf is the raw count and
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, so unseen query terms still weigh in.
class TfIdfScorer final : public Scorer {
public:
    explicit TfIdfScorer(const Corpus& corpus);

    std::vector<Ranked> rank(const std::vector<std::string>& tokens) const override;
    double idf(const std::string& term) const;

private:
    struct Doc {
        int id;
        std::unordered_map<std::string, double> weights;
        double norm;
    };
    std::size_t n_docs_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
    std::vector<Doc> docs_;
};

std::vector<Ranked> score(const std::vector<std::string>& tokens, const Corpus& corpus);

struct Slots {
    std::map<Slot, std::string> values;
    std::vector<std::string> robots; // robot ids in mention order
    Urgency urgency = Urgency::normal;
    bool stealth = false;

    bool has(Slot s) const { return values.contains(s); }
};

/// Gazetteer match over map entity and robot names, longest match first.
/// Buildings are recognised but fill no slot.
Slots extract_slots(const std::vector<std::string>& tokens, const WorldMap& map, const Roster& roster);

enum class AddressingMode { explicit_addressee, implicit_addressee };

std::string_view to_string(AddressingMode m);
std::optional<AddressingMode> parse_addressing_mode(std::string_view s);

struct PendingFrame {
    int pair_id = 0;
    std::map<Slot, std::string> filled;
    std::set<Slot> missing;
    std::vector<std::string> robots; // addressees already known
    Urgency urgency = Urgency::normal;
    bool stealth = false;
    double created = 0.0;
};

struct DialogueTurn {
    std::string speaker; // operator | robot:<id> | dm | wizard
    std::string text;
    double time = 0.0;
    bool chat_only = false;

    friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct DialogueContext {
    AddressingMode mode = AddressingMode::explicit_addressee;
    std::optional<std::string> attended_robot;
    double attended_since = 0.0;
    std::optional<PendingFrame> pending;
    std::map<std::string, bool> busy;
    std::vector<DialogueTurn> transcript;
    std::set<std::string> stealth_tasks;
    int next_msg = 1;

    /// Records a task so its statuses are phrased correctly.
    void track(const TbsMessage& msg);
};

enum class Disposition { executed, clarification, wake_ack, off_topic };

std::string_view to_string(Disposition d);
std::optional<Disposition> parse_disposition(std::string_view s);

struct DmOutput {
    std::string reply_to_operator;
    std::vector<TbsMessage> tbs;
    std::optional<int> matched_pair;
    double score = 0.0;
    Disposition disposition = Disposition::off_topic;
};

/// Leading vocative: "Husky", "Husky, ...", "hey Husky ...".
struct Wake {
    std::string robot_id;
    std::vector<std::string> remainder;
};

/// Finds a leading robot name. Throws UnknownRobotName when the text opens
/// with a capitalised word and a comma that names no robot.
std::optional<Wake> detect_wake(std::string_view text, const Roster& roster);

struct NeedClarification {
    std::string question;
};

using Addressee = std::variant<std::vector<std::string>, NeedClarification>;

/// Picks the robots a task pair applies to, for a turn without a wake prefix.
/// `slots` supplies named robots and the leader to exclude.
Addressee resolve_addressee(const std::vector<std::string>& tokens, const TrainingPair& best, const Slots& slots,
                            const DialogueContext& context, const Roster& roster);

inline constexpr double default_threshold = 0.35;

class DialogueManager {
public:
    DialogueManager(Corpus corpus, std::shared_ptr<const WorldMap> map, Roster roster,
                    std::unique_ptr<Scorer> scorer = nullptr, double threshold = default_threshold);

    DmOutput interpret(const DialogueTurn& turn, DialogueContext& context) const;

    /// Robot feedback for a status, or nullopt for phases that stay silent.
    std::optional<DialogueTurn> on_status(const TbsStatus& status, DialogueContext& context) const;

    const Corpus& corpus() const { return corpus_; }
    const Roster& roster() const { return roster_; }
    double threshold() const { return threshold_; }
    const TrainingPair* pair(int id) const;

private:
    DmOutput interpret_tokens(const std::vector<std::string>& tokens, std::optional<std::string> woken,
                              double time, DialogueContext& context) const;
    DmOutput fill_pending(const std::vector<std::string>& tokens, const Slots& slots,
                          std::optional<std::string> woken, double time, DialogueContext& context) const;
    DmOutput complete(const TrainingPair& pair, std::map<Slot, std::string> filled,
                      std::vector<std::string> robots, Urgency urgency, bool stealth, double score, double time,
                      DialogueContext& context) const;
    std::string display_name(const std::string& robot_id) const;

    Corpus corpus_;
    std::shared_ptr<const WorldMap> map_;
    Roster roster_;
    std::unique_ptr<Scorer> scorer_;
    double threshold_;
};

/// Template-generated training set over the map's entity names.
Corpus generate_corpus(const WorldMap& map, const Roster& roster);

} // namespace multibot
