#include <math.h>
#include <stdio.h>
#include <string.h>

#include "tugwar.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, \
                    #cond, tw_last_error());                     \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    double mu[1] = {0.0}, sigma[1] = {1.0};
    TwMarket *market = NULL;
    CHECK(tw_market_new(1, mu, sigma, 0.0, 1.0, &market) == TW_STATUS_OK);

    double p[1] = {1.0}, h[1] = {1.0}, v = 0.0;
    CHECK(tw_hm(market, 0.0, p, h, 1, 10.0, TW_SIDE_MINUS, &v) == TW_STATUS_OK);
    CHECK(fabs(v + 2.5) < 1e-12);
    CHECK(tw_f_limit(market, 0.0, p, h, 1, &v) == TW_STATUS_OK);
    CHECK(fabs(v - 2.5) < 1e-12);

    double zero[1] = {0.0};
    CHECK(tw_f_limit(market, 0.0, zero, h, 1, &v) == TW_STATUS_GRADIENT_DEGENERATE);
    CHECK(tw_hm(market, 0.0, NULL, h, 1, 10.0, TW_SIDE_PLUS, &v) == TW_STATUS_NULL_POINTER);
    CHECK(strlen(tw_last_error()) > 0);

    double bad_sigma[1] = {0.0};
    TwMarket *bad = NULL;
    CHECK(tw_market_new(1, mu, bad_sigma, 0.0, 1.0, &bad) == TW_STATUS_INVALID_INPUT);
    CHECK(bad == NULL);

    TwPayoff *payoff = NULL;
    CHECK(tw_payoff_constant(1, 5.0, &payoff) == TW_STATUS_OK);
    double lo[1] = {-2.0}, hi[1] = {2.0}, x[1] = {0.0};
    size_t nx[1] = {41};
    TwSurface *surface = NULL;
    CHECK(tw_solve(market, payoff, TW_MODE_LIMIT_F, 10.0, lo, hi, nx, 1, 0, &surface) == TW_STATUS_OK);
    CHECK(tw_surface_nt(surface) > 0);
    CHECK(tw_surface_value(surface, x, 1, 0.0, &v) == TW_STATUS_OK);
    CHECK(fabs(v - 5.0) < 1e-12);
    double far[1] = {9.0};
    CHECK(tw_surface_value(surface, far, 1, 0.0, &v) == TW_STATUS_OUT_OF_DOMAIN);

    tw_surface_free(surface);
    tw_payoff_free(payoff);
    tw_market_free(market);
    tw_market_free(NULL);
    printf("ok\n");
    return 0;
}
