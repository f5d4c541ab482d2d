#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <relu_forge/constructors.hpp>
#include <relu_forge/serialization.hpp>

using namespace relu_forge;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int rc = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "relu_forge_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run(const std::string& args) {
    const fs::path out = workdir() / "stdout.txt";
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = std::string("\"") + RELU_FORGE_CLI_PATH + "\" " + args + " > " +
                            out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string path_of(const char* name) { return (workdir() / name).string(); }

} // namespace

TEST_CASE("catalog lists the families") {
    const RunResult r = run("catalog");
    CHECK(r.rc == 0);
    CHECK(r.out.find("tower") != std::string::npos);
    CHECK(r.out.find("gauss_prod") != std::string::npos);
    CHECK(r.err.empty());
}

TEST_CASE("build a family, then evaluate and re-certify the artifact") {
    const std::string net = path_of("tower3.json");
    const std::string rep = path_of("tower3.report.json");
    const RunResult b = run("build --family tower --d 3 --eps 0.05 --out " + net +
                            " --report " + rep);
    CHECK(b.rc == 0);
    CHECK(b.out.find("certified") == 0);
    REQUIRE(fs::exists(net));
    REQUIRE(fs::exists(rep));
    CHECK(slurp(rep).find("\"certified\": true") != std::string::npos);

    // The tower at (1,1,1) is exactly 1.
    const RunResult e = run("eval --net " + net + " --point 1,1,1");
    CHECK(e.rc == 0);
    CHECK(std::fabs(std::stod(e.out) - 1.0) <= 0.05);

    const RunResult c = run("--samples 2000 --pairs 100 certify --net " + net +
                            " --family tower --d 3 --eps 0.05");
    CHECK(c.rc == 0);
    CHECK(c.out.find("\"certified\": true") != std::string::npos);

    // The same network cannot meet a tighter target.
    const RunResult tight = run("--samples 2000 --pairs 100 certify --net " + net +
                                " --family tower --d 3 --eps 0.001 --out " +
                                path_of("tight.json"));
    CHECK(tight.rc == 2);
    CHECK(slurp(workdir() / "tight.json").find("\"certified\": false") != std::string::npos);
}

TEST_CASE("eval prints exact coordinates for exact networks") {
    const std::string id = path_of("id3.json");
    save_network(identity_network(3), id);
    const RunResult r = run("eval --net " + id + " --point 1,-2,0.5");
    CHECK(r.rc == 0);
    CHECK(r.out == "1,-2,0.5\n");

    const std::string mx = path_of("max3.json");
    save_network(max_net(3), mx);
    const RunResult m = run("eval --net " + mx + " --point -1,-2,-0.5");
    CHECK(m.rc == 0);
    CHECK(m.out == "-0.5\n");

    const RunResult bad = run("eval --net " + mx + " --point 1,2");
    CHECK(bad.rc == 1);
    CHECK(bad.err.find("error:") != std::string::npos);

    const RunResult garbage = run("eval --net " + mx + " --point 1,zap,3");
    CHECK(garbage.rc == 1);
    CHECK(garbage.err.find("invalid coordinate") != std::string::npos);
}

TEST_CASE("build validates its inputs before doing work") {
    const RunResult no_src = run("build --eps 0.1");
    CHECK(no_src.rc == 1);
    CHECK(no_src.err.find("error:") != std::string::npos);

    const RunResult bad_eps = run("build --family tower --d 3 --eps 0");
    CHECK(bad_eps.rc == 1);

    const std::string bad_spec = path_of("bad_spec.json");
    std::ofstream(bad_spec) << "{ not json";
    const RunResult b = run("build --spec " + bad_spec + " --eps 0.1 --out " +
                            path_of("never.json"));
    CHECK(b.rc == 1);
    CHECK(b.err.find("invalid JSON") != std::string::npos);

    const RunResult both = run("build --spec " + bad_spec +
                               " --family tower --d 3 --eps 0.1");
    CHECK(both.rc == 1);
    CHECK(both.err.find("exactly one") != std::string::npos);
}

TEST_CASE("build accepts a spec file") {
    const std::string spec = path_of("coscos.json");
    std::ofstream(spec) << R"json({"mode":"theorem1","norm":"1","stages":[
        {"kind":"lipschitz_parallel","domain":{"a":-1,"b":1,"dim":1},
         "blocks":[{"dim":1,"expr":"cos(x1)","lipschitz":1}]},
        {"kind":"lipschitz_parallel","domain":{"a":-1,"b":1,"dim":1},
         "blocks":[{"dim":1,"expr":"cos(x1)","lipschitz":1}]}]})json";
    const std::string net = path_of("coscos_net.json");
    const RunResult r = run("build --spec " + spec + " --eps 0.1 --out " + net);
    CHECK(r.rc == 0);
    const RunResult e = run("eval --net " + net + " --point 0");
    CHECK(e.rc == 0);
    CHECK(std::fabs(std::stod(e.out) - std::cos(1.0)) <= 0.1);
}

TEST_CASE("scale emits CSV and JSON artifacts") {
    const std::string csv = path_of("pm_scale.csv");
    const std::string js = path_of("pm_scale.json");
    const RunResult r = run("--samples 1000 --pairs 50 scale --family prodmax_tree "
                            "--dims 2:4 --eps 0.1 --out " + csv + " --json " + js);
    CHECK(r.rc == 0);
    CHECK(r.out.find("3 cells") != std::string::npos);
    const std::string body = slurp(csv);
    CHECK(body.rfind("d,eps,params,sup_error\n", 0) == 0);
    CHECK(body.find("2,0.1,3746,") != std::string::npos);
    CHECK(body.find("4,0.1,67078,") != std::string::npos);
    CHECK(body.find('\r') == std::string::npos);
    CHECK(slurp(js).find("\"all_certified\": true") != std::string::npos);

    const RunResult bad_dims = run("scale --family tower --dims 4 --eps 0.1 --out " + csv);
    CHECK(bad_dims.rc == 1);
    CHECK(bad_dims.err.find("lo:hi") != std::string::npos);

    // Unknown families fail per cell, which surfaces as a certification failure.
    const RunResult unknown = run("scale --family nope --dims 2:3 --eps 0.1 --out " +
                                  path_of("nope.csv"));
    CHECK(unknown.rc == 2);
    CHECK(unknown.out.find("FAILURES") != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
    const std::string net1 = path_of("rep1.json");
    const std::string rep1 = path_of("rep1.report.json");
    const std::string net2 = path_of("rep2.json");
    const std::string rep2 = path_of("rep2.report.json");
    const std::string tail = " --family nested_log --d 4 --eps 0.1";
    CHECK(run("build" + tail + " --out " + net1 + " --report " + rep1).rc == 0);
    CHECK(run("build" + tail + " --out " + net2 + " --report " + rep2).rc == 0);
    CHECK(slurp(net1) == slurp(net2));
    CHECK(slurp(rep1) == slurp(rep2));
    CHECK(!slurp(net1).empty());
}
