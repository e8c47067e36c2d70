# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cost-only simulation of the SRPT-family policies.

Mirrors ``engine.run`` event for event (same tie-breaks, same floating-point
expressions) but keeps only flat arrays and accumulates costs on the fly.
"""

import numpy as np

from libc.math cimport pow, INFINITY

cdef double TOL = 1e-12

cdef enum:
    JOB = 0
    TASK = 1


cdef inline bint _less(double ra, double aa, long ia, double rb, double ab, long ib):
    if ra != rb:
        return ra < rb
    if aa != ab:
        return aa < ab
    return ia < ib


def simulate(double[::1] job_arrival, long[::1] job_reduces, long[::1] job_first, long[::1] job_ntasks,
             long[::1] task_job, char[::1] task_is_map, double[::1] task_size,
             int rule, bint relaxed, int K, double alpha, double coef, double gamma, bint idle_p1):
    """Return ``(F_job, F_task, energy)`` for one policy run.

    ``rule`` is 0 for job-SRPT, 1 for task-SRPT; ``relaxed`` ignores precedence.
    """
    cdef Py_ssize_t n_jobs = job_arrival.shape[0]
    cdef Py_ssize_t n_tasks = task_size.shape[0]
    cdef double inv_alpha = 1.0 / alpha

    rem_a = np.array(task_size, dtype=np.float64)
    ctime_a = np.full(n_tasks, -1.0)
    act_a = np.empty(n_tasks, dtype=np.int64)
    stamp_a = np.full(max(n_tasks, n_jobs) + 1, -1, dtype=np.int64)
    maps_left_a = np.zeros(n_jobs, dtype=np.int64)
    jw_a = np.zeros(n_jobs, dtype=np.float64)
    jstamp_a = np.full(n_jobs, -1, dtype=np.int64)
    best_a = np.empty(n_jobs, dtype=np.int64)
    ajobs_a = np.empty(n_jobs, dtype=np.int64)
    sel_a = np.empty(K, dtype=np.int64)
    rate_a = np.empty(K, dtype=np.float64)

    cdef double[::1] rem = rem_a
    cdef double[::1] ctime = ctime_a
    cdef long[::1] act = act_a
    cdef long[::1] stamp = stamp_a
    cdef long[::1] maps_left = maps_left_a
    cdef double[::1] jw = jw_a
    cdef long[::1] jstamp = jstamp_a
    cdef long[::1] best = best_a
    cdef long[::1] ajobs = ajobs_a
    cdef long[::1] sel = sel_a
    cdef double[::1] rate = rate_a

    cdef Py_ssize_t n_act = 0, nxt = 0, i, k, x, j, n_aj, nsel, nfree, pick, w
    cdef long job, first, b_hat, epoch = 0
    cdef double t, t_arr, dt, dt_done, t_end, d, speed, idle, length
    cdef double energy = 0.0
    cdef bint free

    if n_jobs == 0:
        return 0.0, 0.0, 0.0
    t = job_arrival[0]
    while True:
        while nxt < n_jobs and job_arrival[nxt] <= t:
            job = nxt
            for x in range(job_first[job], job_first[job] + job_ntasks[job]):
                if task_size[x] > 0:
                    act[n_act] = x
                    n_act += 1
                    if task_is_map[x]:
                        maps_left[job] += 1
                elif task_is_map[x]:
                    ctime[x] = t
            if maps_left[job] == 0:
                for x in range(job_first[job], job_first[job] + job_ntasks[job]):
                    if not task_is_map[x] and task_size[x] == 0:
                        ctime[x] = t
            nxt += 1
        t_arr = job_arrival[nxt] if nxt < n_jobs else INFINITY

        if n_act == 0:
            if nxt == n_jobs:
                break
            t = t_arr
            continue

        # decide -------------------------------------------------------------
        epoch += 1
        nsel = 0
        if rule == JOB:
            n_aj = 0
            for i in range(n_act):
                x = act[i]
                job = task_job[x]
                if jstamp[job] != epoch:
                    jstamp[job] = epoch
                    jw[job] = 0.0
                    best[job] = -1
                    ajobs[n_aj] = job
                    n_aj += 1
                jw[job] += rem[x]
                free = relaxed or task_is_map[x] or maps_left[job] == 0
                if free and (best[job] < 0 or _less(rem[x], 0.0, x, rem[best[job]], 0.0, best[job])):
                    best[job] = x
            speed = pow((<double>n_aj / K) / coef, inv_alpha) if n_aj >= K else pow(1.0 / coef, inv_alpha)
            # K cheapest jobs by (work, arrival, id)
            for k in range(min(K, n_aj)):
                pick = -1
                for i in range(n_aj):
                    job = ajobs[i]
                    if jstamp[job] == -epoch:  # already picked
                        continue
                    if pick < 0 or _less(jw[job], job_arrival[job], job,
                                         jw[ajobs[pick]], job_arrival[ajobs[pick]], ajobs[pick]):
                        pick = i
                job = ajobs[pick]
                jstamp[job] = -epoch
                sel[nsel] = best[job]
                stamp[best[job]] = epoch
                rate[nsel] = speed
                nsel += 1
            # spare servers take the shortest free tasks not yet running
            while nsel < K:
                pick = -1
                for i in range(n_act):
                    x = act[i]
                    job = task_job[x]
                    if stamp[x] == epoch:
                        continue
                    if not (relaxed or task_is_map[x] or maps_left[job] == 0):
                        continue
                    if pick < 0 or _less(rem[x], job_arrival[job], x,
                                         rem[pick], job_arrival[task_job[pick]], pick):
                        pick = x
                if pick < 0:
                    break
                stamp[pick] = epoch
                sel[nsel] = pick
                rate[nsel] = speed
                nsel += 1
        else:
            nfree = 0
            for i in range(n_act):
                x = act[i]
                if relaxed or task_is_map[x] or maps_left[task_job[x]] == 0:
                    nfree += 1
            if nfree >= K:
                speed = pow((<double>(n_act + 1) / K) / coef, inv_alpha)
                for k in range(K):
                    pick = -1
                    for i in range(n_act):
                        x = act[i]
                        job = task_job[x]
                        if stamp[x] == epoch:
                            continue
                        if not (relaxed or task_is_map[x] or maps_left[job] == 0):
                            continue
                        if pick < 0 or _less(rem[x], job_arrival[job], x,
                                             rem[pick], job_arrival[task_job[pick]], pick):
                            pick = x
                    stamp[pick] = epoch
                    sel[nsel] = pick
                    rate[nsel] = speed
                    nsel += 1
            else:
                for i in range(n_act):
                    x = act[i]
                    job = task_job[x]
                    if not (relaxed or task_is_map[x] or maps_left[job] == 0):
                        continue
                    sel[nsel] = x
                    if task_is_map[x]:
                        b_hat = min(maps_left[job], K)
                        rate[nsel] = pow((<double>(job_reduces[job] + 1 + b_hat + 1) / b_hat) / coef, inv_alpha)
                    else:
                        rate[nsel] = pow(1.0 / coef, inv_alpha)
                    nsel += 1

        idle = pow(1.0 / coef, inv_alpha) if idle_p1 else 0.0
        if gamma != 1.0:
            for k in range(nsel):
                rate[k] = rate[k] * gamma
            idle = idle * gamma

        # advance ------------------------------------------------------------
        first = -1
        dt_done = INFINITY
        for k in range(nsel):
            d = rem[sel[k]] / rate[k]
            if d < dt_done or (d == dt_done and sel[k] < first):
                dt_done = d
                first = sel[k]
        if t_arr - t <= dt_done:
            dt = t_arr - t
            t_end = t_arr
        else:
            dt = dt_done
            t_end = t + dt_done
        if not (dt > 0 and dt < INFINITY):
            raise RuntimeError(f"degenerate interval of length {dt} at t={t}")
        length = t_end - t
        for k in range(nsel):
            energy += coef * pow(rate[k], alpha) * length
        if idle > 0:
            energy += (K - nsel) * (coef * pow(idle, alpha) * length)

        for k in range(nsel):
            x = sel[k]
            rem[x] -= rate[k] * dt
            if rem[x] <= TOL or (x == first and dt == dt_done):
                rem[x] = 0.0
                ctime[x] = t_end
                job = task_job[x]
                if task_is_map[x]:
                    maps_left[job] -= 1
                    if maps_left[job] == 0:
                        for w in range(job_first[job], job_first[job] + job_ntasks[job]):
                            if not task_is_map[w] and task_size[w] == 0:
                                ctime[w] = t_end
        t = t_end
        j = 0
        for i in range(n_act):
            x = act[i]
            if ctime[x] < 0:
                act[j] = x
                j += 1
        n_act = j

    cdef double F_job = 0.0, F_task = 0.0, c
    for job in range(n_jobs):
        c = job_arrival[job]
        for x in range(job_first[job], job_first[job] + job_ntasks[job]):
            if ctime[x] > c:
                c = ctime[x]
            if task_size[x] > 0:
                F_task += ctime[x] - job_arrival[job]
        F_job += c - job_arrival[job]
    return F_job, F_task, energy
