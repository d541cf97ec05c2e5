#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "rankderiv/derivations.hpp"
#include "rankderiv/errors.hpp"

using namespace rankderiv;
namespace fs = std::filesystem;

namespace {

const FieldSpec F2 = FieldSpec::prime(2);

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("rankderiv_cli_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string identity_table() {
    return format_delta_table(identity_delta(2, F2).tabulate(collect_rank_at_most(2, 1, F2)));
}

}  // namespace

TEST_CASE("factor prints both factors in matrix format") {
    TempDir dir;
    const auto y = dir.write("y.mat", "n 4 field F2\n1 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n");
    const auto r = run({"factor", "--field", "F2", "--n", "4", "--s", "2", "--in", y});
    CHECK(r.status == cli::exit_ok);
    CHECK(r.out ==
          "n 4 field F2\n1 0 0 0\n0 1 0 0\n0 0 0 0\n0 0 0 0\n"
          "n 4 field F2\n1 0 0 0\n0 0 0 0\n0 0 1 0\n0 0 0 0\n");

    std::istringstream back(r.out);
    const auto y1 = read_matrix(back), y2 = read_matrix(back);
    REQUIRE(y1);
    REQUIRE(y2);
    CHECK(*y1 * *y2 == parse_matrix("n 4 field F2\n1 0 0 0\n0 0 0 0\n0 0 0 0\n0 0 0 0\n"));

    const auto p = run({"factor", "--field", "F2", "--s", "2", "--in", y, "--porcelain"});
    CHECK(p.out == "y1=1 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0\ny2=1 0 0 0 0 0 0 0 0 0 1 0 0 0 0 0\n");

    const auto bad = run({"factor", "--field", "F2", "--s", "1", "--in", dir.write("i.mat", "n 2 field F2\n1 0\n0 1\n")});
    CHECK(bad.status == cli::exit_usage);
    CHECK(bad.err.find("rank(y) <= s") != std::string::npos);
}

TEST_CASE("solve reports the dimension and a re-parsable basis") {
    const auto r = run({"solve", "--field", "F2", "--n", "2", "--s", "1"});
    CHECK(r.status == cli::exit_ok);
    CHECK(r.out.rfind("dimension 3\nunknowns 40\nblocks 81\nbasis 1\ndelta n 2 field F2 domain rank-leq(1)\n", 0) ==
          0);

    TempDir dir;
    const auto base = dir.file("sol");
    const auto w = run({"solve", "--field", "F2", "--n", "2", "--s", "1", "--out", base});
    CHECK(w.status == cli::exit_ok);
    for (int i = 1; i <= 3; ++i) {
        std::ifstream is(base + "." + std::to_string(i) + ".delta");
        REQUIRE(is);
        const auto table = read_delta_table(is);
        CHECK(verify_hypothesis(table, 1, VerifyMode::exhaustive_mode()).passed());
        const auto v = run({"verify", "--field", "F2", "--n", "2", "--s", "1", "--delta",
                            base + "." + std::to_string(i) + ".delta"});
        CHECK(v.status == cli::exit_ok);
        CHECK(v.out == "pairs_checked 81\nviolations 0\nresult pass\n");
    }
}

TEST_CASE("verify flags the identity map") {
    TempDir dir;
    const auto id = dir.write("id.delta", identity_table());
    const auto r = run({"verify", "--field", "F2", "--n", "2", "--s", "1", "--delta", id});
    CHECK(r.status == cli::exit_failed);
    CHECK(r.out.find("violation x=[1 0 0 0] y=[1 0 0 0] lhs=[1 0 0 0] rhs=[0 0 0 0]\n") != std::string::npos);
    CHECK(r.out.find("result fail\n") != std::string::npos);

    const auto e = run({"extract", "--field", "F2", "--s", "1", "--delta", id});
    CHECK(e.status == cli::exit_failed);
    CHECK(e.err.find("extraction failed") != std::string::npos);
}

TEST_CASE("extract, extend and reconstruct on a derivation table") {
    TempDir dir;
    const CanonicalDerivation D{parse_matrix("n 2 field F2\n0 1\n1 1\n"), FieldDerivation::zero(F2)};
    const auto full = DeltaMap::from_rule(2, F2, Domain::full(), [D](const Matrix& x) { return apply_derivation(D, x); });
    const auto table = dir.write("d.delta", format_delta_table(full.tabulate(collect_rank_at_most(2, 2, F2))));
    const auto rank1 = dir.write("r1.delta", format_delta_table(full.tabulate(collect_rank_k(2, 1, F2))));

    const auto e = run({"extract", "--field", "F2", "--n", "2", "--s", "1", "--delta", table});
    CHECK(e.status == cli::exit_ok);
    CHECK(e.out == "mu zero\nA\nn 2 field F2\n0 1\n1 1\n");

    const auto x = run({"extend", "--field", "F2", "--n", "2", "--s", "1", "--delta", rank1, "--out",
                        dir.file("ext.delta")});
    CHECK(x.status == cli::exit_ok);
    CHECK(x.out == "extended 1\nresult consistent\n");
    std::ifstream ext(dir.file("ext.delta"));
    const auto extended = read_delta_table(ext);
    CHECK(extended(Matrix::zero(2, F2)).is_zero());

    const auto rc = run({"reconstruct", "--field", "F2", "--n", "2", "--delta", table});
    CHECK(rc.status == cli::exit_ok);
    CHECK(rc.out == "s 1\nrank_set 2 1\ngap_ranks\nmu zero\nA\nn 2 field F2\n0 1\n1 1\nchecked 16\nresult pass\n");
}

TEST_CASE("rank set, cover, enumerate and count") {
    CHECK(run({"rankset", "--n", "8"}).out == "rank_set 8 7 5 1\ngap_ranks 2 3 4 6\n");
    CHECK(run({"rankset", "--n", "8", "--porcelain"}).out == "rank_set=8,7,5,1\ngap_ranks=2,3,4,6\n");
    CHECK(run({"cover", "--n", "8", "--k", "6"}).out == "cover_rank 7\n");
    CHECK(run({"count", "--field", "F2", "--n", "2", "--k", "1"}).out == "count 9\nformula 9\n");
    const auto en = run({"enumerate", "--field", "F2", "--n", "2", "--k", "2", "--porcelain"});
    CHECK(en.out ==
          "matrix=0 1 1 0\nmatrix=0 1 1 1\nmatrix=1 0 0 1\nmatrix=1 0 1 1\nmatrix=1 1 0 1\nmatrix=1 1 1 0\n");
}

TEST_CASE("usage errors exit with status 2") {
    TempDir dir;
    CHECK(run({}).status == cli::exit_usage);
    CHECK(run({"frobnicate"}).status == cli::exit_usage);
    CHECK(run({"solve", "--n", "2", "--s", "1"}).status == cli::exit_usage);
    CHECK(run({"solve", "--field", "F6", "--n", "2", "--s", "1"}).status == cli::exit_usage);
    CHECK(run({"solve", "--field", "F2", "--n", "3", "--s", "2"}).status == cli::exit_usage);
    CHECK(run({"count", "--field", "Q", "--n", "2", "--k", "1"}).status == cli::exit_usage);
    CHECK(run({"rankset", "--n", "1"}).status == cli::exit_usage);

    // Options are validated before the (missing) input file is touched.
    const auto missing = dir.file("missing.delta");
    const auto r = run({"verify", "--field", "F2", "--s", "1", "--mode", "sampled", "--delta", missing});
    CHECK(r.status == cli::exit_usage);
    CHECK(r.err.find("--seed") != std::string::npos);
    const auto f = run({"verify", "--field", "F9", "--s", "1", "--delta", missing});
    CHECK(f.status == cli::exit_usage);
    CHECK(f.err.find("F9") != std::string::npos);

    const auto garbage = dir.write("g.delta", "delta n 2 field F2 domain full\n1 0 0 0 -> 1\n");
    const auto g = run({"verify", "--field", "F2", "--s", "1", "--delta", garbage});
    CHECK(g.status == cli::exit_usage);
    CHECK(g.err.find("line 2") != std::string::npos);
    CHECK(std::count(g.err.begin(), g.err.end(), '\n') == 1);

    const auto wrong_field = dir.write("w.delta", identity_table());
    CHECK(run({"verify", "--field", "F3", "--s", "1", "--delta", wrong_field}).status == cli::exit_usage);
}

TEST_CASE("identical invocations give byte-identical reports") {
    TempDir dir;
    const auto id = dir.write("id.delta", identity_table());
    const std::vector<std::string> args = {"verify", "--field", "F2",      "--n",     "2",   "--s",
                                           "1",      "--mode",  "sampled", "--seed",  "42",  "--samples",
                                           "50",     "--delta", id};
    const auto a = run(args), b = run(args);
    CHECK(a.out == b.out);
    CHECK(a.status == b.status);
    CHECK(run({"solve", "--field", "F3", "--n", "2", "--s", "1"}).out ==
          run({"solve", "--field", "F3", "--n", "2", "--s", "1"}).out);
}

TEST_CASE("the installed binary maps outcomes to exit statuses") {
    TempDir dir;
    const auto id = dir.write("id.delta", identity_table());
    auto status = [](const std::string& cmd) {
        const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    const std::string bin = RANKDERIV_CLI_PATH;
    CHECK(status(bin + " rankset --n 4") == 0);
    CHECK(status(bin + " verify --field F2 --n 2 --s 1 --delta " + id) == 1);
    CHECK(status(bin + " verify --field F2 --n 2 --s 1") == 2);

    FILE* pipe = ::popen((bin + " solve --field F2 --n 2 --s 1").c_str(), "r");
    REQUIRE(pipe);
    char line[64] = {};
    REQUIRE(std::fgets(line, sizeof line, pipe));
    ::pclose(pipe);
    CHECK(std::string(line) == "dimension 3\n");
}
