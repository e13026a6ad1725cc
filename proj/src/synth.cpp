#include "storyaug/synth.hpp"

#include "storyaug/random.hpp"

#include <array>
#include <cstdio>
#include <span>
#include <string_view>

namespace storyaug {

namespace {

using Words = std::span<const std::string_view>;

constexpr std::string_view kNames[] = {"Lily", "Tom", "Mia", "Ben", "Sue", "Max", "Anna", "Tim", "Lucy", "Sam",
                                       "Zoe", "Jack", "Ella", "Leo", "Amy", "Finn", "Rosa", "Kai", "Nora", "Ivy"};
constexpr std::string_view kAnimals[] = {"cat", "dog", "bunny", "bird", "fox", "bear", "duck", "frog", "mouse",
                                         "lion", "tiger", "owl", "pig", "cow", "horse", "fish", "turtle", "puppy"};
constexpr std::string_view kAdjectives[] = {"little", "big", "happy", "shiny", "red", "blue", "soft", "funny", "brave",
                                            "kind", "tiny", "old", "new", "green", "pretty", "quiet", "loud",
                                            "yellow", "warm", "silly", "gentle", "bright", "fluffy", "curious"};
constexpr std::string_view kObjects[] = {"ball", "kite", "box", "hat", "book", "toy", "cake", "flower", "boat",
                                         "car", "drum", "apple", "stick", "rock", "shell", "blanket", "cup", "key",
                                         "map", "bell", "leaf", "star", "guitar", "balloon", "cookie", "sock"};
constexpr std::string_view kPlaces[] = {"park", "garden", "forest", "house", "pond", "hill", "beach", "farm",
                                        "town", "river", "school", "yard", "room", "field", "cave", "lake"};
constexpr std::string_view kVerbs[] = {"play", "run", "jump", "sing", "dance", "read", "swim", "paint", "climb",
                                       "laugh", "run around", "look for bugs", "build things", "share"};
constexpr std::string_view kPastVerbs[] = {"ran", "jumped", "looked", "walked", "played", "smiled", "laughed",
                                           "waited", "sang", "danced", "hopped", "climbed"};
constexpr std::string_view kFeelings[] = {"happy", "sad", "excited", "scared", "proud", "tired", "surprised",
                                          "angry", "glad", "sorry", "calm", "thankful"};
constexpr std::string_view kTimes[] = {"One day", "The next morning", "Later that day", "After lunch",
                                       "That night", "Soon", "Then", "Suddenly"};
constexpr std::string_view kSpeakers[] = {"*MOT", "*CHI", "*FAT", "*SIS"};
constexpr std::string_view kQuestions[] = {"do you want the", "where is the", "can you find the", "is that your",
                                           "what color is the", "who has the", "shall we get the"};
constexpr std::string_view kCommands[] = {"look at the", "give me the", "put down the", "pick up the",
                                          "bring the", "hold the", "show me the"};

class Writer {
  public:
    explicit Writer(std::uint64_t seed) : rng_(seed) {}

    std::string_view pick(Words w) { return w[rng_.below(w.size())]; }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }
    bool chance(double p) { return rng_.uniform() < p; }

  private:
    Rng rng_;
};

std::string cat(std::initializer_list<std::string_view> parts) {
    std::string s;
    for (auto p : parts) s += p;
    return s;
}

std::string story(Writer &w) {
    const std::string name(w.pick(kNames));
    const std::string friend_name(w.pick(kNames));
    const std::string animal(w.pick(kAnimals));
    const std::string pronoun = w.chance(0.5) ? "She" : "He";
    const std::string poss = pronoun == "She" ? "her" : "his";
    std::string text = cat({"Once upon a time, there was a ", w.pick(kAdjectives), " ", animal, " named ", name, ". ",
                            pronoun, " lived in a ", w.pick(kAdjectives), " ", w.pick(kPlaces), ". ", name,
                            " loved to ", w.pick(kVerbs), " with ", poss, " ", w.pick(kObjects), "."});
    text += "\n\n";

    const std::size_t middle = w.between(4, 11);
    for (std::size_t i = 0; i < middle; ++i) {
        if (i) text += (w.chance(0.2) ? "\n\n" : (w.chance(0.15) ? "\n" : " "));
        switch (w.between(0, 6)) {
        case 0:
            text += cat({w.pick(kTimes), ", ", name, " found a ", w.pick(kAdjectives), " ", w.pick(kObjects),
                         " near the ", w.pick(kPlaces), "."});
            break;
        case 1:
            text += cat({name, " said, “", w.pick(kQuestions), " ", w.pick(kObjects), "?”"});
            break;
        case 2:
            text += cat({friend_name, " the ", w.pick(kAnimals), " came to ", w.pick(kVerbs), " too. They ",
                         w.pick(kPastVerbs), " all day."});
            break;
        case 3:
            text += cat({"“Let’s ", w.pick(kVerbs), "!” said ", friend_name, ". ", name, " was very ",
                         w.pick(kFeelings), "."});
            break;
        case 4:
            text += cat({name, " ", w.pick(kPastVerbs), " to the ", w.pick(kPlaces), " and saw a ", w.pick(kAdjectives),
                         " ", w.pick(kAnimals), "."});
            break;
        case 5:
            text += cat({"The ", w.pick(kObjects), " was ", w.pick(kAdjectives), " and ", w.pick(kAdjectives),
                         ", so ", name, " felt ", w.pick(kFeelings), "."});
            break;
        default:
            text += cat({pronoun, " wanted to ", w.pick(kVerbs), ", but the ", w.pick(kObjects), " was too ",
                         w.pick(kAdjectives), "."});
            break;
        }
    }
    text += "\n\n";
    text += cat({"In the end, ", name, " and ", friend_name, " were ", w.pick(kFeelings), ". They ",
                 w.pick(kPastVerbs), " together. The end."});
    return text;
}

std::string transcript(Writer &w) {
    std::string text;
    const std::size_t turns = w.between(20, 60);
    for (std::size_t i = 0; i < turns; ++i) {
        if (i) text += w.chance(0.1) ? "\n\n" : "\n";
        text += w.pick(kSpeakers);
        text += ":\t";
        switch (w.between(0, 4)) {
        case 0:
            text += cat({w.pick(kQuestions), " ", w.pick(kObjects), " ?"});
            break;
        case 1:
            text += cat({w.pick(kCommands), " ", w.pick(kAdjectives), " ", w.pick(kObjects), " ."});
            break;
        case 2:
            text += cat({"the ", w.pick(kAnimals), " is in the ", w.pick(kPlaces), " ."});
            break;
        case 3:
            text += cat({"I ", w.pick(kPastVerbs), " with the ", w.pick(kObjects), " ."});
            break;
        default:
            text += cat({"yes , ", w.pick(kFeelings), " ", w.pick(kAnimals), " !"});
            break;
        }
    }
    return text;
}

} // namespace

std::string synth_raw_document(SynthStyle style, std::uint64_t seed) {
    Writer w(seed);
    return style == SynthStyle::stories ? story(w) : transcript(w);
}

Corpus synth_corpus(SynthStyle style, std::int64_t target_words, std::uint64_t seed, const std::string &prefix) {
    std::vector<Document> docs;
    std::int64_t total = 0;
    const Source source = style == SynthStyle::stories ? Source::tinystories() : Source::babylm();
    char id[32];
    for (std::uint64_t i = 0; total < target_words; ++i) {
        std::snprintf(id, sizeof id, "-%07llu", static_cast<unsigned long long>(i));
        docs.push_back(normalize_document(prefix + id, synth_raw_document(style, derive_seed(seed, i)), source));
        total += docs.back().word_count();
    }
    return Corpus(std::move(docs));
}

} // namespace storyaug
