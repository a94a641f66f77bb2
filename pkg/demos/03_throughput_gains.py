"""
Cell throughput gain of full duplex over half duplex.

A reduced version of the ``gains`` preset: 20 drops per setting, LTE rates,
100 dB self-interference cancellation. Uniform users see similar gains with
and without SIC; a single hotspot hurts plain FD and favours SIC.
"""

from fdcell import SimConfig, gain_vs_baseline, run_experiment


def main():
    print("N_h   HD+FD   HD+FD+SIC")
    for n_h in (0, 1, 2, 3):
        base = SimConfig(rate_model="lte", n_hotspots=n_h, drops=20, seed=3)
        hd = run_experiment(base.replace(scenario="HD"))
        fd = run_experiment(base.replace(scenario="HD+FD"))
        sic = run_experiment(base.replace(scenario="HD+FD+SIC"))
        print(f"{n_h:>3}  {gain_vs_baseline(fd, hd):5.1f}%  {gain_vs_baseline(sic, hd):8.1f}%")


if __name__ == "__main__":
    main()
