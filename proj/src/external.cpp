#include "cfsat/smtlib.hpp"

#include "cfsat/errors.hpp"

#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace cfsat {

ExternalBackend ExternalBackend::parse(std::string_view command)
{
    ExternalBackend b;
    std::istringstream in{std::string(command)};
    std::string word;
    while (in >> word)
        b.argv.push_back(word);
    if (b.argv.empty())
        throw BackendError("empty solver command");
    return b;
}

ExternalBackend ExternalBackend::from_environment()
{
    const char* cmd = std::getenv(kSolverEnv);
    if (!cmd || !*cmd)
        throw BackendError(std::string("external backend requested but ") + kSolverEnv +
                           " is not set (e.g. " + kSolverEnv + "=\"z3 -in\")");
    return parse(cmd);
}

// ---------------------------------------------------------------- s-expressions

namespace {

struct Sexp {
    std::string atom;
    std::vector<Sexp> list;
    bool is_list = false;
};

class SexpReader {
public:
    explicit SexpReader(std::string_view text) : text_(text) {}

    bool at_end()
    {
        skip();
        return pos_ >= text_.size();
    }

    Sexp read()
    {
        skip();
        if (pos_ >= text_.size())
            throw BackendError("unexpected end of solver output");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Sexp s;
            s.is_list = true;
            for (;;) {
                skip();
                if (pos_ >= text_.size())
                    throw BackendError("unbalanced parenthesis in solver output");
                if (text_[pos_] == ')') {
                    ++pos_;
                    return s;
                }
                s.list.push_back(read());
            }
        }
        if (c == ')')
            throw BackendError("unexpected ')' in solver output");
        if (c == '|') {
            auto end = text_.find('|', pos_ + 1);
            if (end == std::string_view::npos)
                throw BackendError("unterminated quoted symbol in solver output");
            Sexp s{std::string(text_.substr(pos_ + 1, end - pos_ - 1)), {}, false};
            pos_ = end + 1;
            return s;
        }
        if (c == '"') {
            auto end = text_.find('"', pos_ + 1);
            while (end != std::string_view::npos && end + 1 < text_.size() && text_[end + 1] == '"')
                end = text_.find('"', end + 2);
            if (end == std::string_view::npos)
                throw BackendError("unterminated string in solver output");
            Sexp s{std::string(text_.substr(pos_, end - pos_ + 1)), {}, false};
            pos_ = end + 1;
            return s;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')')
            ++pos_;
        return Sexp{std::string(text_.substr(start, pos_ - start)), {}, false};
    }

private:
    void skip()
    {
        while (pos_ < text_.size()) {
            if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            } else if (text_[pos_] == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

Rational value_of(const Sexp& s)
{
    if (!s.is_list) {
        if (s.atom == "true")
            return 1;
        if (s.atom == "false")
            return 0;
        return parse_rational(s.atom);
    }
    if (s.list.size() == 2 && !s.list[0].is_list && s.list[0].atom == "-")
        return -value_of(s.list[1]);
    if (s.list.size() == 3 && !s.list[0].is_list && s.list[0].atom == "/") {
        Rational d = value_of(s.list[2]);
        if (d == 0)
            throw BackendError("division by zero in solver model");
        return value_of(s.list[1]) / d;
    }
    if (s.list.size() == 2 && !s.list[0].is_list && s.list[0].atom == "to_real")
        return value_of(s.list[1]);
    throw BackendError("unsupported value in solver model");
}

Assignment model_values(const Sexp& top)
{
    if (!top.is_list)
        throw BackendError("solver model is not a list");
    std::size_t first = (!top.list.empty() && !top.list[0].is_list && top.list[0].atom == "model") ? 1 : 0;
    Assignment out;
    for (std::size_t i = first; i < top.list.size(); ++i) {
        const Sexp& def = top.list[i];
        if (!def.is_list || def.list.size() != 5 || def.list[0].atom != "define-fun")
            throw BackendError("unexpected entry in solver model");
        if (!def.list[2].is_list || !def.list[2].list.empty())
            continue;
        try {
            out[def.list[1].atom] = value_of(def.list[4]);
        } catch (const ParseError& e) {
            throw BackendError(std::string("unreadable value in solver model: ") + e.what());
        }
    }
    return out;
}

} // namespace

Assignment parse_smt_model(std::string_view text)
{
    SexpReader reader(text);
    return model_values(reader.read());
}

// ---------------------------------------------------------------- subprocess

namespace {

struct Fd {
    int fd = -1;
    ~Fd() { reset(); }
    void reset()
    {
        if (fd >= 0)
            ::close(fd);
        fd = -1;
    }
};

struct RunResult {
    std::string out;
    std::string err;
    int status = 0;
};

RunResult run_process(const ExternalBackend& backend, const std::string& input)
{
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        throw BackendError(std::string("cannot create pipes: ") + std::strerror(errno));

    pid_t pid = ::fork();
    if (pid < 0)
        throw BackendError(std::string("cannot fork: ") + std::strerror(errno));
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
            ::close(fd);
        std::vector<char*> args;
        for (const auto& a : backend.argv)
            args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    Fd to_child{in_pipe[1]}, from_child{out_pipe[0]}, err_child{err_pipe[0]};
    ::signal(SIGPIPE, SIG_IGN);

    for (int fd : {to_child.fd, from_child.fd, err_child.fd})
        ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);

    RunResult result;
    std::size_t written = 0;
    auto deadline = std::chrono::steady_clock::now() + backend.timeout;
    char buf[4096];
    while (from_child.fd >= 0 || err_child.fd >= 0) {
        std::vector<pollfd> fds;
        if (to_child.fd >= 0)
            fds.push_back({to_child.fd, POLLOUT, 0});
        if (from_child.fd >= 0)
            fds.push_back({from_child.fd, POLLIN, 0});
        if (err_child.fd >= 0)
            fds.push_back({err_child.fd, POLLIN, 0});
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw BudgetExceeded("external backend timed out after " + std::to_string(backend.timeout.count()) +
                                 " ms");
        }
        int n = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
        if (n < 0 && errno != EINTR)
            break;
        for (const auto& p : fds) {
            if (!p.revents)
                continue;
            if (p.fd == to_child.fd) {
                ssize_t w = ::write(to_child.fd, input.data() + written, input.size() - written);
                if (w > 0)
                    written += static_cast<std::size_t>(w);
                if (w < 0 && errno != EAGAIN)
                    to_child.reset();
                if (written == input.size())
                    to_child.reset();
            } else {
                Fd& src = p.fd == from_child.fd ? from_child : err_child;
                std::string& sink = p.fd == from_child.fd ? result.out : result.err;
                ssize_t r = ::read(src.fd, buf, sizeof buf);
                if (r > 0)
                    sink.append(buf, static_cast<std::size_t>(r));
                else if (r == 0 || errno != EAGAIN)
                    src.reset();
            }
        }
    }
    to_child.reset();
    int status = 0;
    ::waitpid(pid, &status, 0);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

} // namespace

SolveOutcome solve_external(const Formula& f, const ExternalBackend& backend)
{
    std::string script = emit_smtlib(f);
    RunResult run = run_process(backend, script);
    if (run.status == 127 && run.out.empty())
        throw BackendError("external backend '" + backend.argv.front() + "' could not be started (set " +
                           kSolverEnv + ")");

    SexpReader reader(run.out);
    if (reader.at_end())
        throw BackendError("external backend produced no answer: " + run.err);
    Sexp answer = reader.read();
    SolveOutcome out;
    if (!answer.is_list && answer.atom == "unsat") {
        out.verdict = Verdict::Unsat;
        return out;
    }
    if (answer.is_list || answer.atom != "sat")
        throw BackendError("external backend answered '" + (answer.is_list ? std::string("(...)") : answer.atom) +
                           "'");
    if (reader.at_end())
        throw BackendError("external backend returned sat without a model");
    Assignment values = model_values(reader.read());
    for (const auto& [name, sort] : free_variables(f))
        out.witness[name] = values.contains(name) ? values.at(name) : Rational(0);
    if (!witness_satisfies(f, out.witness))
        throw BackendError("external backend witness fails the exact re-check");
    out.verdict = Verdict::Sat;
    return out;
}

} // namespace cfsat
