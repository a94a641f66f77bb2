"""
Steering the DL/UL rate ratio with the utility weight rho.

HD keeps the ratio near one because each direction gets its airtime share
at full power regardless of rho. With full duplex, rho decides how the pair
splits power and which partner is chosen, so the ratio follows rho.
"""

from fdcell import SimConfig, run_experiment


def main():
    print("scenario     rho=0.3  rho=0.5  rho=0.7")
    for scenario in ("HD", "HD+FD", "HD+FD+SIC"):
        row = []
        for rho in (0.3, 0.5, 0.7):
            cfg = SimConfig(rate_model="lte", si_cancellation_db=80.0, scenario=scenario,
                            rho=rho, drops=20)
            row.append(run_experiment(cfg).gamma)
        print(f"{scenario:<11}" + "".join(f"  {g:7.3f}" for g in row))


if __name__ == "__main__":
    main()
