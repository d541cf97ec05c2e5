#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rankderiv/derivations.hpp"
#include "rankderiv/errors.hpp"
#include "rankderiv/matrix.hpp"
#include "rankderiv/rank_factor.hpp"
#include "rankderiv/solver_oracle.hpp"

namespace rankderiv::cli {

namespace {

struct Options {
    std::string field;
    std::size_t n = 0;
    std::size_t s = 0;
    std::size_t k = 0;
    std::optional<std::uint64_t> seed;
    std::string mode = "exhaustive";
    std::string scope = "rank-s";
    std::size_t samples = 1000;
    std::string in, out, delta, x, y, probes;
    bool porcelain = false;
};

// Plain mode prints "name value"; porcelain prints "name=value". Matrices
// are blocks in the matrix text format, or a single key line in porcelain.
class Reporter {
public:
    Reporter(std::ostream& os, bool porcelain) : os_(os), porcelain_(porcelain) {}

    template <typename T>
    void field(const std::string& name, const T& value) {
        os_ << name << (porcelain_ ? "=" : " ") << value << '\n';
    }

    void list(const std::string& name, const std::vector<std::size_t>& values) {
        std::ostringstream v;
        for (std::size_t i = 0; i < values.size(); ++i) v << (i ? (porcelain_ ? "," : " ") : "") << values[i];
        if (porcelain_)
            os_ << name << '=' << v.str() << '\n';
        else
            os_ << name << (values.empty() ? "" : " ") << v.str() << '\n';
    }

    void matrix(const std::string& name, const Matrix& m) {
        if (porcelain_)
            os_ << name << '=' << m.key() << '\n';
        else
            write_matrix(os_, m);
    }

    // Plain mode puts the name on its own line above the block.
    void labeled_matrix(const std::string& name, const Matrix& m) {
        if (!porcelain_) os_ << name << '\n';
        matrix(name, m);
    }

    std::ostream& raw() { return os_; }

private:
    std::ostream& os_;
    bool porcelain_;
};

std::string bracket(const Matrix& m) { return "[" + m.key() + "]"; }

std::ifstream open_input(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open '" + path + "'");
    return is;
}

Matrix load_matrix(const std::string& path, const Options& o) {
    auto is = open_input(path);
    auto m = read_matrix(is);
    if (!m) throw ParseError("'" + path + "' holds no matrix");
    if (o.n && m->n() != o.n)
        throw UsageError("'" + path + "' has n = " + std::to_string(m->n()) + " but --n " + std::to_string(o.n));
    if (!o.field.empty() && !(FieldSpec::parse(o.field) == m->field()))
        throw UsageError("'" + path + "' is over " + m->field().to_string() + " but --field " + o.field);
    return *m;
}

DeltaMap load_delta(const Options& o) {
    auto is = open_input(o.delta);
    DeltaMap d = read_delta_table(is);
    if (o.n && d.n() != o.n)
        throw UsageError("'" + o.delta + "' has n = " + std::to_string(d.n()) + " but --n " + std::to_string(o.n));
    if (!o.field.empty() && !(FieldSpec::parse(o.field) == d.field()))
        throw UsageError("'" + o.delta + "' is over " + d.field().to_string() + " but --field " + o.field);
    return d;
}

VerifyMode verify_mode(const Options& o) {
    if (o.mode == "exhaustive") return VerifyMode::exhaustive_mode();
    if (o.mode != "sampled") throw UsageError("--mode must be exhaustive or sampled");
    if (!o.seed) throw UsageError("--mode sampled requires an explicit --seed");
    return VerifyMode::sampled(o.samples, *o.seed);
}

std::vector<Element> parse_probes(const Options& o, const FieldSpec& field) {
    std::vector<Element> out;
    std::istringstream is(o.probes);
    std::string tok;
    while (std::getline(is, tok, ','))
        if (!tok.empty()) out.push_back(Element::parse(field, tok));
    return out;
}

void print_derivation(Reporter& rep, const CanonicalDerivation& D) {
    rep.field("mu", D.mu.describe());
    rep.labeled_matrix("A", D.A);
}

int cmd_factor(const Options& o, Reporter& rep) {
    if (o.s == 0) throw UsageError("factor needs --s >= 1");
    const Matrix y = load_matrix(o.in, o);
    const auto f = factor_rank_s(y, o.s);
    rep.matrix("y1", f.y1);
    rep.matrix("y2", f.y2);
    return exit_ok;
}

int cmd_adapt(const Options& o, Reporter& rep) {
    if (o.s == 0) throw UsageError("adapt needs --s >= 1");
    const Matrix x = load_matrix(o.x, o);
    const Matrix y = load_matrix(o.y, o);
    const auto f = adapted_factor(x, y, o.s);
    rep.field("case", to_string(f.case_tag));
    rep.matrix("x1", f.x1);
    rep.matrix("x2", f.x2);
    return exit_ok;
}

int cmd_rankset(const Options& o, Reporter& rep) {
    rep.list("rank_set", rank_set(o.n));
    rep.list("gap_ranks", gap_ranks(o.n));
    return exit_ok;
}

int cmd_cover(const Options& o, Reporter& rep) {
    rep.field("cover_rank", cover_rank(o.n, o.k));
    return exit_ok;
}

int cmd_extract(const Options& o, Reporter& rep) {
    if (o.s == 0) throw UsageError("extract needs --s >= 1");
    const DeltaMap d = load_delta(o);
    const auto D = extract_derivation(d, o.s, parse_probes(o, d.field()));
    print_derivation(rep, D);
    return exit_ok;
}

void print_violations(Reporter& rep, const VerifyReport& r) {
    rep.field("pairs_checked", r.pairs_checked);
    rep.field("violations", r.violation_count);
    for (const auto& v : r.violations)
        rep.field("violation", "x=" + bracket(v.x) + " y=" + bracket(v.y) + " lhs=" + bracket(v.lhs) +
                                   " rhs=" + bracket(v.rhs));
    rep.field("result", r.passed() ? "pass" : "fail");
}

int cmd_verify(const Options& o, Reporter& rep) {
    if (o.s == 0) throw UsageError("verify needs --s >= 1");
    if (o.scope != "rank-s" && o.scope != "mixed") throw UsageError("--scope must be rank-s or mixed");
    const VerifyMode mode = verify_mode(o);
    const DeltaMap d = load_delta(o);
    const auto r = verify_hypothesis(d, o.s, mode,
                                     o.scope == "mixed" ? VerifyScope::mixed_low_rank : VerifyScope::rank_s_pairs);
    print_violations(rep, r);
    return r.passed() ? exit_ok : exit_failed;
}

int cmd_extend(const Options& o, Reporter& rep) {
    if (o.s == 0) throw UsageError("extend needs --s >= 1");
    const DeltaMap d = load_delta(o);
    const auto r = extend_to_low_ranks(d, o.s);
    rep.field("extended", r.extended_count);
    for (const auto& bad : r.inconsistencies)
        rep.field("inconsistent", "y=" + bracket(bad.y) + " first=" + bracket(bad.first) +
                                      " second=" + bracket(bad.second));
    if (!o.out.empty()) {
        std::ofstream os(o.out);
        if (!os) throw UsageError("cannot write '" + o.out + "'");
        write_delta_table(os, r.extended);
    } else {
        write_delta_table(rep.raw(), r.extended);
    }
    rep.field("result", r.consistent() ? "consistent" : "inconsistent");
    return r.consistent() ? exit_ok : exit_failed;
}

int cmd_reconstruct(const Options& o, Reporter& rep) {
    const VerifyMode mode = verify_mode(o);
    const DeltaMap d = load_delta(o);
    const auto r = reconstruct_full(d, mode, parse_probes(o, d.field()));
    rep.field("s", r.s);
    rep.list("rank_set", r.union_ranks);
    rep.list("gap_ranks", r.gap_ranks);
    print_derivation(rep, r.derivation);
    rep.field("checked", r.checked);
    for (const auto& w : r.failures)
        rep.field("witness", "rank=" + std::to_string(w.rank) + " kind=" + w.kind + " z=" + bracket(w.z));
    rep.field("result", r.passed() ? "pass" : "fail");
    return r.passed() ? exit_ok : exit_failed;
}

int cmd_solve(const Options& o, Reporter& rep) {
    const FieldSpec F = FieldSpec::parse(o.field);
    const auto space = solution_space(o.n, o.s, F);
    rep.field("dimension", space.dimension);
    rep.field("unknowns", space.unknowns);
    rep.field("blocks", space.blocks);
    for (std::size_t i = 0; i < space.basis.size(); ++i) {
        rep.field("basis", i + 1);
        if (!o.out.empty()) {
            const std::string path = o.out + "." + std::to_string(i + 1) + ".delta";
            std::ofstream os(path);
            if (!os) throw UsageError("cannot write '" + path + "'");
            write_delta_table(os, space.basis[i]);
            rep.field("file", path);
        } else {
            write_delta_table(rep.raw(), space.basis[i]);
        }
    }
    return exit_ok;
}

int cmd_enumerate(const Options& o, Reporter& rep) {
    const FieldSpec F = FieldSpec::parse(o.field);
    auto it = enumerate_rank_k(o.n, o.k, F);
    while (auto m = it.next()) rep.matrix("matrix", *m);
    return exit_ok;
}

int cmd_count(const Options& o, Reporter& rep) {
    const FieldSpec F = FieldSpec::parse(o.field);
    if (!F.is_finite()) throw UsageError("count needs a finite field");
    if (o.k > o.n) throw UsageError("count needs k <= n");
    rep.field("count", rank_count(o.n, o.k, F));
    rep.field("formula", rank_count_formula(o.n, o.k, F.order()));
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Exact linear algebra for multiplicative derivations on low-rank matrices", "rankderiv"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto field_opt = [&](CLI::App* c, bool required) {
        auto* opt = c->add_option("--field", o.field, "Field: Q, F<p>, Q(t), F<p>(t)");
        if (required) opt->required();
    };
    auto porcelain = [&](CLI::App* c) { c->add_flag("--porcelain", o.porcelain, "key=value output"); };

    auto* factor = app.add_subcommand("factor", "Factor y into two rank-s matrices");
    field_opt(factor, false);
    factor->add_option("--n", o.n);
    factor->add_option("--s", o.s)->required();
    factor->add_option("--in", o.in, "Matrix file holding y")->required();
    porcelain(factor);

    auto* adapt = app.add_subcommand("adapt", "Adapted factorization of a rank-1 x against a rank-s y");
    field_opt(adapt, false);
    adapt->add_option("--n", o.n);
    adapt->add_option("--s", o.s)->required();
    adapt->add_option("--x", o.x)->required();
    adapt->add_option("--y", o.y)->required();
    porcelain(adapt);

    auto* rankset = app.add_subcommand("rankset", "Ranks n+1-2^i of the reconstruction union");
    rankset->add_option("--n", o.n)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    porcelain(rankset);

    auto* cover = app.add_subcommand("cover", "Covering rank for a gap rank k");
    cover->add_option("--n", o.n)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
    cover->add_option("--k", o.k)->required();
    porcelain(cover);

    auto* extract = app.add_subcommand("extract", "Extract (A, mu) from a delta table");
    field_opt(extract, false);
    extract->add_option("--n", o.n);
    extract->add_option("--s", o.s)->required();
    extract->add_option("--delta", o.delta)->required();
    extract->add_option("--probes", o.probes, "Comma-separated probe elements (infinite fields)");
    porcelain(extract);

    auto* verify = app.add_subcommand("verify", "Check the product rule on rank-s pairs");
    field_opt(verify, false);
    verify->add_option("--n", o.n);
    verify->add_option("--s", o.s)->required();
    verify->add_option("--delta", o.delta)->required();
    verify->add_option("--mode", o.mode)->check(CLI::IsMember({"exhaustive", "sampled"}));
    verify->add_option("--scope", o.scope)->check(CLI::IsMember({"rank-s", "mixed"}));
    verify->add_option("--seed", o.seed);
    verify->add_option("--samples", o.samples);
    porcelain(verify);

    auto* extend = app.add_subcommand("extend", "Extend a rank-s delta table to all ranks below s");
    field_opt(extend, false);
    extend->add_option("--n", o.n);
    extend->add_option("--s", o.s)->required();
    extend->add_option("--delta", o.delta)->required();
    extend->add_option("--out", o.out, "Write the extended table here instead of stdout");
    porcelain(extend);

    auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct a full-ring derivation");
    field_opt(reconstruct, false);
    reconstruct->add_option("--n", o.n);
    reconstruct->add_option("--delta", o.delta)->required();
    reconstruct->add_option("--mode", o.mode)->check(CLI::IsMember({"exhaustive", "sampled"}));
    reconstruct->add_option("--seed", o.seed);
    reconstruct->add_option("--samples", o.samples);
    reconstruct->add_option("--probes", o.probes);
    porcelain(reconstruct);

    auto* solve = app.add_subcommand("solve", "Solution space of the rank-s product rule over F_p");
    field_opt(solve, true);
    solve->add_option("--n", o.n)->required();
    solve->add_option("--s", o.s)->required();
    solve->add_option("--out", o.out, "Write basis tables to <out>.<i>.delta");
    porcelain(solve);

    auto* enumerate = app.add_subcommand("enumerate", "List all rank-k matrices");
    field_opt(enumerate, true);
    enumerate->add_option("--n", o.n)->required()->check(CLI::PositiveNumber);
    enumerate->add_option("--k", o.k)->required();
    porcelain(enumerate);

    auto* count = app.add_subcommand("count", "Count rank-k matrices");
    field_opt(count, true);
    count->add_option("--n", o.n)->required()->check(CLI::PositiveNumber);
    count->add_option("--k", o.k)->required();
    porcelain(count);

    std::vector<const char*> argv{"rankderiv"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    Reporter rep(out, o.porcelain);
    try {
        if (!o.field.empty()) FieldSpec::parse(o.field);
        if (*factor) return cmd_factor(o, rep);
        if (*adapt) return cmd_adapt(o, rep);
        if (*rankset) return cmd_rankset(o, rep);
        if (*cover) return cmd_cover(o, rep);
        if (*extract) return cmd_extract(o, rep);
        if (*verify) return cmd_verify(o, rep);
        if (*extend) return cmd_extend(o, rep);
        if (*reconstruct) return cmd_reconstruct(o, rep);
        if (*solve) return cmd_solve(o, rep);
        if (*enumerate) return cmd_enumerate(o, rep);
        if (*count) return cmd_count(o, rep);
    } catch (const ExtractionError& e) {
        err << "extraction failed: " << e.what() << '\n';
        return exit_failed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    err << "error: unknown subcommand\n";
    return exit_usage;
}

}  // namespace rankderiv::cli
