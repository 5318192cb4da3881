"""Generate the committed H2 integral fixtures.

Target orbitals are the RHF sigma_g / sigma_u orbitals of H2/STO-3G at
R = 1.4 bohr. Two continuum-like orbitals (a diffuse s and a diffuse p_z
Gaussian on the bond midpoint) are Schmidt-orthogonalised against the
target orbitals. All integrals are full-space (no finite-volume
restriction). Run once; the outputs are committed.
"""
import json
import sys

import numpy as np
from pyscf import ao2mo, fci, gto, scf

R = 1.4
DIFFUSE_S = 0.12
DIFFUSE_P = 0.12


def build():
    target = gto.M(
        atom=[["H", (0, 0, -R / 2)], ["H", (0, 0, R / 2)]],
        basis="sto-3g",
        unit="Bohr",
    )
    mf = scf.RHF(target).run(conv_tol=1e-12)
    c_target = mf.mo_coeff
    # fix the gauge: positive coefficient on the first atom's 1s
    for k in range(c_target.shape[1]):
        if c_target[0, k] < 0:
            c_target[:, k] *= -1

    full = gto.M(
        atom=[["H", (0, 0, -R / 2)], ["H", (0, 0, R / 2)], ["ghost-H", (0, 0, 0)]],
        basis={
            "H": "sto-3g",
            "ghost-H": gto.basis.parse(
                f"""
H S
  {DIFFUSE_S} 1.0
H P
  {DIFFUSE_P} 1.0
"""
            ),
        },
        unit="Bohr",
    )
    s = full.intor("int1e_ovlp")
    nao = full.nao
    # AO order: H1 1s, H2 1s, ghost s, ghost px, py, pz
    c = np.zeros((nao, 4))
    c[:2, :2] = c_target
    cont = np.zeros((nao, 2))
    cont[2, 0] = 1.0  # diffuse s -> ag
    cont[5, 1] = 1.0  # diffuse p_z -> b1u
    for j in range(2):
        v = cont[:, j]
        for k in range(2):
            v = v - c[:, k] * (c[:, k] @ s @ v)
        v = v / np.sqrt(v @ s @ v)
        c[:, 2 + j] = v
    assert np.allclose(c.T @ s @ c, np.eye(4), atol=1e-10)
    h1 = c.T @ (full.intor("int1e_kin") + full.intor("int1e_nuc")) @ c
    eri = ao2mo.restore(1, ao2mo.full(full, c), 4)
    enuc = target.energy_nuc()
    return target, mf, h1, eri, enuc


def write_fcidump(path, h1, eri, enuc, norb, nelec, irreps, registers):
    lines = []
    lines.append(
        f" &FCI NORB={norb},NELEC={nelec},MS2=0,\n"
        f"  IRREP={','.join(repr(x) for x in irreps)},\n"
        f"  REGISTER={','.join(repr(x) for x in registers)},\n"
        f"  ORDERING='CHEMIST',\n &END"
    )
    tol = 1e-12
    for i in range(norb):
        for j in range(i + 1):
            for k in range(norb):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    v = eri[i, j, k, l]
                    if abs(v) > tol:
                        lines.append(f"{v: .16e} {i+1:3d} {j+1:3d} {k+1:3d} {l+1:3d}")
    for i in range(norb):
        for j in range(i + 1):
            v = h1[i, j]
            if abs(v) > tol:
                lines.append(f"{v: .16e} {i+1:3d} {j+1:3d}   0   0")
    lines.append(f"{enuc: .16e}   0   0   0   0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main(outdir):
    target, mf, h1, eri, enuc = build()
    write_fcidump(
        f"{outdir}/h2_sto3g_target.fcidump",
        h1[:2, :2], eri[:2, :2, :2, :2], enuc, 2, 2, ["ag", "b1u"], ["T", "T"],
    )
    write_fcidump(
        f"{outdir}/h2_scattering.fcidump",
        h1, eri, enuc, 4, 2, ["ag", "b1u", "ag", "b1u"], ["T", "T", "C", "C"],
    )
    # reference target FCI (2 electrons, Sz = 0, all 4 determinants)
    cis = fci.direct_spin1.FCI()
    cis.conv_tol = 1e-14
    e, vecs = cis.kernel(h1[:2, :2], eri[:2, :2, :2, :2], 2, (1, 1), nroots=4, ecore=enuc)
    ground = vecs[0]
    ref = {
        "rhf_energy": mf.e_tot,
        "fci_energies_sz0": sorted(float(x) for x in e),
        "ground_ci_abs": {
            "sigma_g_squared": abs(float(ground[0, 0])),
            "sigma_u_squared": abs(float(ground[1, 1])),
        },
        "nuclear_repulsion": enuc,
    }
    with open(f"{outdir}/h2_reference.json", "w") as f:
        json.dump(ref, f, indent=2)
        f.write("\n")
    print(json.dumps(ref, indent=2))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
