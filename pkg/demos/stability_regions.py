"""ASCII pictures of stability regions: AB2 against its damped variants.

Each cell is '#' when every characteristic root stays in the unit disk.
"""
from momentum_lmm import MethodSpec, linear_multistep_form, stability_raster

RE, IM, RES = (-4.0, 0.5), (-2.0, 2.0), (72, 25)

for spec in (MethodSpec.ab(2), MethodSpec.hb(2, 0.5), MethodSpec.ghvb(1.5)):
    grid = stability_raster(linear_multistep_form(spec), RE, IM, RES)
    print(f"{spec.label}   re in {RE}, im in {IM}")
    for row in grid[::-1]:
        print("".join("#" if s else "." for s in row))
    print()
