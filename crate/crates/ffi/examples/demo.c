#include <stdio.h>

#include "giardia.h"

static int fail(const char *what) {
    const char *msg = giardia_last_error();
    fprintf(stderr, "%s failed: %s\n", what, msg ? msg : "(no message)");
    return 1;
}

int main(void) {
    GiardiaModelParams p = giardia_model_params_published();
    double x1_star, x2_star, u_um;
    if (giardia_open_loop_equilibrium(&p, &x1_star, &x2_star) != GIARDIA_STATUS_OK)
        return fail("equilibrium");
    if (giardia_convert_dose(54.77107402652974, GIARDIA_DOSE_UNIT_MICROGRAM_PER_ML, &u_um) != GIARDIA_STATUS_OK)
        return fail("convert");

    GiardiaConfig *cfg = NULL;
    GiardiaTrajectory *traj = NULL;
    if (giardia_config_default(&cfg) != GIARDIA_STATUS_OK)
        return fail("config");
    if (giardia_config_set_profile(cfg, GIARDIA_PROFILE_THEOREM) != GIARDIA_STATUS_OK)
        return fail("profile");
    if (giardia_simulate(cfg, &traj) != GIARDIA_STATUS_OK)
        return fail("simulate");

    size_t n = 0, env = 0, obs = 0;
    GiardiaRecord last;
    giardia_trajectory_len(traj, &n);
    giardia_trajectory_get(traj, n - 1, &last);
    giardia_trajectory_check_envelope(traj, 0.024, &env);
    giardia_trajectory_check_observer(traj, 1.14e-2, 4.80, 11.25, &obs);

    printf("x2_star %.6f\n", x2_star);
    printf("320uM %.4f\n", u_um);
    printf("records %zu final_t %.1f y %.3e\n", n, last.t, last.x1);
    printf("violations envelope %zu observer %zu\n", env, obs);

    GiardiaStatus s = giardia_config_set_strategy(cfg, "pid");
    printf("bad strategy status %d\n", (int)s);

    giardia_trajectory_free(traj);
    giardia_config_free(cfg);
    return 0;
}
