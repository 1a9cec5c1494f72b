#include "cfsat/rational.hpp"

#include "cfsat/errors.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace cfsat {

namespace {

bool all_digits(std::string_view s)
{
    if (s.empty())
        return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return true;
}

Integer pow10(unsigned long e)
{
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
    return r;
}

[[noreturn]] void bad(std::string_view text)
{
    throw ParseError("not a decimal or rational literal: '" + std::string(text) + "'");
}

} // namespace

Rational parse_rational(std::string_view text)
{
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    if (s.empty())
        bad(text);

    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }

    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash);
        auto den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den))
            bad(text);
        Rational q{Integer(std::string(num), 10), Integer(std::string(den), 10)};
        if (q.get_den() == 0)
            bad(text);
        q.canonicalize();
        return negative ? Rational(-q) : q;
    }

    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        auto exp_part = s.substr(e + 1);
        bool exp_negative = false;
        if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
            exp_negative = exp_part.front() == '-';
            exp_part.remove_prefix(1);
        }
        if (!all_digits(exp_part) || exp_part.size() > 6)
            bad(text);
        exponent = std::stol(std::string(exp_part));
        if (exp_negative)
            exponent = -exponent;
        s = s.substr(0, e);
    }

    std::string_view int_part = s;
    std::string_view frac_part;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        int_part = s.substr(0, dot);
        frac_part = s.substr(dot + 1);
    }
    if (int_part.empty() && frac_part.empty())
        bad(text);
    if ((!int_part.empty() && !all_digits(int_part)) || (!frac_part.empty() && !all_digits(frac_part)))
        bad(text);

    std::string digits = std::string(int_part) + std::string(frac_part);
    Integer mantissa(digits.empty() ? std::string("0") : digits, 10);
    exponent -= static_cast<long>(frac_part.size());

    Rational q;
    if (exponent >= 0)
        q = Rational(mantissa * pow10(static_cast<unsigned long>(exponent)));
    else
        q = Rational(mantissa, pow10(static_cast<unsigned long>(-exponent)));
    q.canonicalize();
    return negative ? Rational(-q) : q;
}

Rational rational_from_double(double value)
{
    if (!std::isfinite(value))
        throw ParseError("non-finite number cannot be represented exactly");
    Rational q;
    mpq_set_d(q.get_mpq_t(), value);
    return q;
}

std::string to_string(const Rational& q)
{
    // Denominator of the form 2^a 5^b gives a terminating decimal.
    Integer den = q.get_den();
    unsigned long twos = mpz_scan1(den.get_mpz_t(), 0);
    mpz_tdiv_q_2exp(den.get_mpz_t(), den.get_mpz_t(), twos);
    unsigned long fives = 0;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
        mpz_divexact_ui(den.get_mpz_t(), den.get_mpz_t(), 5);
        ++fives;
    }
    if (den != 1)
        return q.get_str();

    unsigned long places = std::max(twos, fives);
    if (places == 0)
        return q.get_num().get_str();
    Integer scaled = q.get_num() * pow10(places) / q.get_den();
    bool negative = scaled < 0;
    if (negative)
        scaled = -scaled;
    std::string digits = scaled.get_str();
    if (digits.size() <= places)
        digits.insert(0, places - digits.size() + 1, '0');
    digits.insert(digits.size() - places, ".");
    return negative ? "-" + digits : digits;
}

double to_double(const Rational& q) { return q.get_d(); }

Integer floor(const Rational& q)
{
    Integer r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

Integer ceil(const Rational& q)
{
    Integer r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

bool is_integer(const Rational& q) { return mpz_divisible_p(q.get_num_mpz_t(), q.get_den_mpz_t()) != 0; }

} // namespace cfsat
