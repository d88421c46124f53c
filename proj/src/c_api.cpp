#include "flipctl/flipctl.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "flipctl/error.hpp"
#include "flipctl/experiment.hpp"
#include "flipctl/kernel_search.hpp"
#include "flipctl/policy.hpp"

struct flipctl_network {
  flipctl::Network net;
};

struct flipctl_problem {
  const flipctl::Network* net;  // borrowed; the network must outlive the problem
  flipctl::Problem problem;
};

struct flipctl_kernel_result {
  flipctl::KernelResult result;
};

struct flipctl_policy {
  const flipctl::Network* net;
  flipctl::ReachabilitySpec spec;
  flipctl::PolicyRun run;
};

struct flipctl_config {
  flipctl::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

flipctl_status fail(flipctl_status status, const char* message) {
  g_last_error = message;
  return status;
}

/// Runs `body`, translating exceptions into status codes.
template <class F>
flipctl_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const flipctl::ParseError& e) {
    return fail(FLIPCTL_ERR_PARSE, e.what());
  } catch (const flipctl::InvalidArgument& e) {
    return fail(FLIPCTL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const flipctl::ResourceRefused& e) {
    return fail(FLIPCTL_ERR_RESOURCE, e.what());
  } catch (const flipctl::StateError& e) {
    return fail(FLIPCTL_ERR_STATE, e.what());
  } catch (const flipctl::IoError& e) {
    return fail(FLIPCTL_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FLIPCTL_ERR_RESOURCE, "out of memory");
  } catch (const std::exception& e) {
    return fail(FLIPCTL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FLIPCTL_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw flipctl::InvalidArgument(std::string(what) + " must not be null");
}

flipctl::TrainingParams to_params(const flipctl_training* t) {
  require(t, "training");
  return {t->episodes, t->max_steps, t->beta, t->omega, t->gamma};
}

flipctl_status from_outcome(flipctl::Outcome o) {
  switch (o) {
    case flipctl::Outcome::Ok: return FLIPCTL_OK;
    case flipctl::Outcome::Unreachable: return FLIPCTL_UNREACHABLE;
    case flipctl::Outcome::AssertionFailed: return FLIPCTL_ASSERTION_FAILED;
  }
  return FLIPCTL_ERR_INTERNAL;
}

}  // namespace

extern "C" {

const char* flipctl_last_error(void) { return g_last_error.c_str(); }

const char* flipctl_status_name(flipctl_status status) {
  switch (status) {
    case FLIPCTL_OK: return "ok";
    case FLIPCTL_ERR_PARSE: return "parse error";
    case FLIPCTL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FLIPCTL_ERR_RESOURCE: return "resource refused";
    case FLIPCTL_ERR_STATE: return "invalid state";
    case FLIPCTL_ERR_IO: return "i/o error";
    case FLIPCTL_UNREACHABLE: return "unreachable";
    case FLIPCTL_ASSERTION_FAILED: return "assertion failed";
    case FLIPCTL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void flipctl_string_free(char* s) { std::free(s); }

flipctl_status flipctl_network_parse(const char* text, flipctl_network** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new flipctl_network{flipctl::parse_network(text)};
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_network_load(const char* path, flipctl_network** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new flipctl_network{flipctl::load_network(path)};
    return FLIPCTL_OK;
  });
}

void flipctl_network_free(flipctl_network* net) { delete net; }

int flipctl_network_nodes(const flipctl_network* net) { return net ? net->net.nodes() : 0; }
int flipctl_network_inputs(const flipctl_network* net) { return net ? net->net.inputs() : 0; }

flipctl_status flipctl_network_format(const flipctl_network* net, char** text) {
  return guarded([&] {
    require(net, "network");
    require(text, "text");
    *text = copy_string(flipctl::format_network(net->net));
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_network_step(const flipctl_network* net, const char* state,
                                    const char* input, const char* flip_set, char* next,
                                    size_t next_size) {
  return guarded([&] {
    require(net, "network");
    require(state, "state");
    require(next, "next");
    const int n = net->net.nodes();
    if (next_size < static_cast<size_t>(n) + 1) {
      throw flipctl::InvalidArgument("output buffer shorter than n + 1 bytes");
    }
    const flipctl::State x = flipctl::parse_state(state, n);
    const flipctl::Input u{flipctl::parse_bits(input ? input : "", net->net.inputs())};
    const flipctl::FlipSet flips =
        flip_set && *flip_set ? flipctl::parse_flip_set(flip_set) : flipctl::FlipSet{};
    const flipctl::State y =
        net->net.step_flipped(x, u, flipctl::make_flip_mask(flips, n));
    const std::string bits = flipctl::to_string(y, n);
    std::memcpy(next, bits.c_str(), bits.size() + 1);
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_problem_parse(const flipctl_network* net, const char* text,
                                     flipctl_problem** out) {
  return guarded([&] {
    require(net, "network");
    require(text, "text");
    require(out, "out");
    *out = new flipctl_problem{&net->net, flipctl::parse_problem(text, net->net)};
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_problem_load(const flipctl_network* net, const char* path,
                                    flipctl_problem** out) {
  return guarded([&] {
    require(net, "network");
    require(path, "path");
    require(out, "out");
    *out = new flipctl_problem{&net->net, flipctl::load_problem(path, net->net)};
    return FLIPCTL_OK;
  });
}

void flipctl_problem_free(flipctl_problem* problem) { delete problem; }

size_t flipctl_problem_initial_count(const flipctl_problem* problem) {
  return problem ? problem->problem.spec.initial().size() : 0;
}

size_t flipctl_problem_target_count(const flipctl_problem* problem) {
  return problem ? problem->problem.spec.targets().size() : 0;
}

flipctl_status flipctl_find_kernels(const flipctl_network* net, const flipctl_problem* problem,
                                    const char* variant, const flipctl_training* training,
                                    uint64_t seed, flipctl_kernel_result** out) {
  return guarded([&] {
    require(net, "network");
    require(problem, "problem");
    require(out, "out");
    flipctl::KernelSearchParams params;
    params.variant = flipctl::parse_search_variant(variant ? variant : "basic");
    params.training = to_params(training);
    params.seed = seed;
    *out = new flipctl_kernel_result{flipctl::find_kernels(
        net->net, problem->problem.spec, problem->problem.flip_candidates, params)};
    return (*out)->result.reachable() ? FLIPCTL_OK : FLIPCTL_UNREACHABLE;
  });
}

void flipctl_kernel_result_free(flipctl_kernel_result* result) { delete result; }

size_t flipctl_kernel_count(const flipctl_kernel_result* result) {
  return result ? result->result.kernels.size() : 0;
}

flipctl_status flipctl_kernel_at(const flipctl_kernel_result* result, size_t index, char** text) {
  return guarded([&] {
    require(result, "result");
    require(text, "text");
    if (index >= result->result.kernels.size()) {
      throw flipctl::InvalidArgument("kernel index out of range");
    }
    *text = copy_string(flipctl::format_flip_set(result->result.kernels[index]));
    return FLIPCTL_OK;
  });
}

uint64_t flipctl_kernel_episodes_to_certify(const flipctl_kernel_result* result,
                                            const char* flip_set) {
  if (!result || !flip_set) return 0;
  try {
    const auto* run = result->result.run(flipctl::parse_flip_set(flip_set));
    return run && run->episodes_to_certify ? *run->episodes_to_certify : 0;
  } catch (...) {
    return 0;
  }
}

flipctl_status flipctl_learn_policy(const flipctl_network* net, const flipctl_problem* problem,
                                    const char* flip_set, const char* algorithm,
                                    const flipctl_training* training, double weight,
                                    double weight_step, uint64_t seed, flipctl_policy** out) {
  return guarded([&] {
    require(net, "network");
    require(problem, "problem");
    require(flip_set, "flip_set");
    require(out, "out");
    const flipctl::FlipSet b = flipctl::parse_flip_set(flip_set);
    const auto algo = flipctl::parse_policy_algorithm(algorithm ? algorithm : "dense");
    const flipctl::ReachabilitySpec& spec = problem->problem.spec;
    flipctl::PolicyParams params;
    params.training = to_params(training);
    params.weight = weight;
    if (weight_step > 0) params.weight_step = weight_step;
    params.seed = seed;
    auto run = algo == flipctl::PolicyAlgorithm::Dense
                   ? flipctl::learn_min_flip_policy(net->net, spec, b, params)
               : algo == flipctl::PolicyAlgorithm::Sparse
                   ? flipctl::learn_min_flip_policy_sparse(net->net, spec, b, params)
                   : flipctl::learn_min_step_policy(net->net, spec, b, params.training, seed);
    *out = new flipctl_policy{&net->net, spec, std::move(run)};
    return FLIPCTL_OK;
  });
}

void flipctl_policy_free(flipctl_policy* policy) { delete policy; }

flipctl_status flipctl_policy_text(const flipctl_policy* policy, char** text) {
  return guarded([&] {
    require(policy, "policy");
    require(text, "text");
    std::ostringstream out;
    const flipctl::ActionSpace space(policy->net->nodes(), policy->net->inputs(),
                                     policy->run.policy.flip_set);
    flipctl::write_policy(out, policy->run.policy, space);
    *text = copy_string(out.str());
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_policy_evaluate(const flipctl_policy* policy, uint64_t cap, double weight,
                                       char** csv) {
  return guarded([&] {
    require(policy, "policy");
    require(csv, "csv");
    const auto eval =
        flipctl::evaluate_policy(*policy->net, policy->spec, policy->run.policy, cap, weight);
    std::ostringstream out;
    flipctl::write_eval_csv(out, eval, policy->net->nodes());
    *csv = copy_string(out.str());
    return FLIPCTL_OK;
  });
}

double flipctl_policy_final_weight(const flipctl_policy* policy) {
  return policy ? policy->run.final_weight : 0.0;
}

flipctl_status flipctl_config_load(const char* path, flipctl_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new flipctl_config{flipctl::load_config(path)};
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_config_parse(const char* text, const char* base_dir,
                                    flipctl_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new flipctl_config{
        flipctl::parse_config(text, base_dir ? std::filesystem::path(base_dir)
                                             : std::filesystem::path{})};
    return FLIPCTL_OK;
  });
}

void flipctl_config_free(flipctl_config* cfg) { delete cfg; }

flipctl_status flipctl_config_set_seed(flipctl_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.seeds = {seed};
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_config_set_out(flipctl_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg, "config");
    require(dir, "dir");
    cfg->cfg.out = dir;
    return FLIPCTL_OK;
  });
}

flipctl_status flipctl_run(const char* command, const flipctl_config* cfg, char** report) {
  return guarded([&] {
    require(command, "command");
    require(cfg, "config");
    require(report, "report");
    *report = nullptr;
    const std::string cmd = command;
    flipctl::CommandResult r;
    if (cmd == "kernels") {
      r = flipctl::run_kernels(cfg->cfg);
    } else if (cmd == "policy") {
      r = flipctl::run_policy(cfg->cfg);
    } else if (cmd == "oracle") {
      r = flipctl::run_oracle(cfg->cfg);
    } else {
      throw flipctl::InvalidArgument("unknown command '" + cmd + "'");
    }
    *report = copy_string(r.report);
    return from_outcome(r.outcome);
  });
}

flipctl_status flipctl_replicate(const char* example, const flipctl_config* cfg, char** report) {
  return guarded([&] {
    require(example, "example");
    require(cfg, "config");
    require(report, "report");
    *report = nullptr;
    const flipctl::CommandResult r = flipctl::run_replicate(example, cfg->cfg);
    *report = copy_string(r.report);
    return from_outcome(r.outcome);
  });
}

}  // extern "C"
