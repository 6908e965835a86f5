#include <doctest.h>

#include "summit/util/csv.hpp"
#include "summit/util/fsio.hpp"
#include "summit/util/ini.hpp"
#include "summit/util/parallel.hpp"
#include "summit/util/rng.hpp"
#include "summit/util/sha256.hpp"
#include "summit/util/text.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>

namespace fs = std::filesystem;
using namespace summit;

TEST_SUITE("sha256") {
    TEST_CASE("known vectors") {
        CHECK(util::Sha256::hex_digest("") ==
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(util::Sha256::hex_digest("abc") ==
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(util::Sha256::hex_digest("The quick brown fox jumps over the lazy dog") ==
              "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
        // Two-block input (> 64 bytes including padding).
        CHECK(util::Sha256::hex_digest(
                  "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
              "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    }

    TEST_CASE("incremental updates match single update") {
        std::string text = "summarization changes topic coherence in measurable ways";
        util::Sha256 split;
        for (char c : text) split.update(&c, 1);
        auto digest = split.digest();
        CHECK(util::to_hex(digest.data(), digest.size()) == util::Sha256::hex_digest(text));
    }
}

TEST_SUITE("rng") {
    TEST_CASE("sequences are reproducible") {
        util::Rng a(42), b(42);
        for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    }

    TEST_CASE("next_double stays in [0, 1)") {
        util::Rng rng(7);
        for (int i = 0; i < 10000; ++i) {
            double v = rng.next_double();
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }

    TEST_CASE("next_bounded stays below the bound") {
        util::Rng rng(9);
        for (int i = 0; i < 10000; ++i) CHECK(rng.next_bounded(17) < 17);
    }

    TEST_CASE("gaussian_at is a pure function with sane moments") {
        CHECK(util::gaussian_at(1, 2, 3) == util::gaussian_at(1, 2, 3));
        CHECK(util::gaussian_at(1, 2, 3) != util::gaussian_at(1, 2, 4));

        double sum = 0, sum_sq = 0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) {
            double g = util::gaussian_at(5, 0, std::uint64_t(i));
            sum += g;
            sum_sq += g * g;
        }
        double mean = sum / n;
        double var = sum_sq / n - mean * mean;
        CHECK(std::abs(mean) < 0.05);
        CHECK(std::abs(var - 1.0) < 0.05);
    }
}

TEST_SUITE("text") {
    TEST_CASE("count_words counts whitespace tokens") {
        CHECK(util::count_words("") == 0);
        CHECK(util::count_words("   ") == 0);
        CHECK(util::count_words("one") == 1);
        CHECK(util::count_words("  one\ttwo\nthree  ") == 3);
    }

    TEST_CASE("first_words truncates and normalizes separators") {
        CHECK(util::first_words("a  b\tc d", 3) == "a b c");
        CHECK(util::first_words("a b", 5) == "a b");
        CHECK(util::first_words("", 5) == "");
    }

    TEST_CASE("trim removes surrounding whitespace only") {
        CHECK(util::trim("  a b \n") == "a b");
        CHECK(util::trim("") == "");
    }

    TEST_CASE("format_double round-trips") {
        for (double v : {0.0, 1.0, -1.5, 0.1, 1e-9, 123456.789, 2.0 / 3.0}) {
            double back = 0;
            CHECK(util::parse_double(util::format_double(v), back));
            CHECK(back == v);
        }
        CHECK(util::format_double(1.0) == "1");
        CHECK(util::format_double(0.5) == "0.5");
    }

    TEST_CASE("format_fixed pins the precision") {
        CHECK(util::format_fixed(1.25, 2) == "1.25");
        CHECK(util::format_fixed(1.0, 3) == "1.000");
        CHECK(util::format_fixed(-0.125, 2) == "-0.12");
    }

    TEST_CASE("parse_int rejects partial parses") {
        long long v = 0;
        CHECK(util::parse_int("42", v));
        CHECK(v == 42);
        CHECK_FALSE(util::parse_int("42x", v));
        CHECK_FALSE(util::parse_int("", v));
        double d = 0;
        CHECK_FALSE(util::parse_double("1.5 apples", d));
    }
}

TEST_SUITE("csv") {
    TEST_CASE("escape quotes only when needed") {
        CHECK(util::csv_escape("plain") == "plain");
        CHECK(util::csv_escape("a,b") == "\"a,b\"");
        CHECK(util::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
        CHECK(util::csv_escape("line\nbreak") == "\"line\nbreak\"");
    }

    TEST_CASE("join then parse round-trips") {
        std::vector<std::string> fields = {"id", "a,b", "with \"quotes\"", "multi\nline", ""};
        auto rows = util::parse_csv(util::csv_join(fields));
        REQUIRE(rows.size() == 1);
        CHECK(rows[0] == fields);
    }

    TEST_CASE("parses CRLF and quoted newlines") {
        auto rows = util::parse_csv("a,b\r\n\"x\ny\",z\r\n");
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == std::vector<std::string>{"a", "b"});
        CHECK(rows[1] == std::vector<std::string>{"x\ny", "z"});
    }

    TEST_CASE("rejects malformed quoting") {
        CHECK_THROWS(util::parse_csv("a,\"unterminated"));
        CHECK_THROWS(util::parse_csv("a,\"x\"y,b"));
    }
}

TEST_SUITE("ini") {
    TEST_CASE("sections, comments and typed getters") {
        auto ini = util::IniFile::parse(
            "# top comment\n"
            "[grid]\n"
            "seeds = 3\n"
            "diversity = 0.1, 0.2, 0.3\n"
            "offline = true\n"
            "; another comment\n"
            "[paths]\n"
            "out = runs/exp one\n");
        CHECK(ini.require("grid.seeds") == "3");
        CHECK(ini.get_int("grid.seeds", 0) == 3);
        CHECK(ini.get_bool("grid.offline", false));
        CHECK(ini.get("paths.out", "") == "runs/exp one");
        CHECK(ini.get("paths.missing", "fallback") == "fallback");
        CHECK_FALSE(ini.has("paths.missing"));
        CHECK_THROWS(ini.require("paths.missing"));

        auto list = ini.get_list("grid.diversity");
        REQUIRE(list.size() == 3);
        CHECK(list[0] == "0.1");
        CHECK(list[2] == "0.3");

        auto keys = ini.keys();
        REQUIRE(keys.size() == 4);
        CHECK(keys[0] == "grid.seeds");
        CHECK(keys[3] == "paths.out");
    }
}

TEST_SUITE("fsio") {
    TEST_CASE("atomic write then read round-trips") {
        fs::path dir = fs::temp_directory_path() / "summit-fsio-test";
        fs::remove_all(dir);
        fs::path file = dir / "nested" / "out.txt";
        util::write_file_atomic(file, "payload\n");
        CHECK(util::read_file(file) == "payload\n");
        // Overwrite goes through the same path.
        util::write_file_atomic(file, "second");
        CHECK(util::read_file(file) == "second");
        fs::remove_all(dir);
    }

    TEST_CASE("read_file reports missing files") {
        CHECK_THROWS(util::read_file("/nonexistent/summit/file.txt"));
    }
}

TEST_SUITE("parallel") {
    TEST_CASE("parallel_for covers every index once") {
        std::vector<int> hits(1000, 0);
        util::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
        CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
        CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
    }

    TEST_CASE("exceptions propagate to the caller") {
        CHECK_THROWS_AS(util::parallel_for(100, 4,
                                           [](std::size_t i) {
                                               if (i == 57) throw std::runtime_error("boom");
                                           }),
                        std::runtime_error);
    }
}
