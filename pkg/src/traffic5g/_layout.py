"""Index layout of the packed parameter vectors shared by both kernel backends.

Keep in sync with the ``cdef enum`` blocks in ``_kernels.pyx``.
"""

# float parameters
C_WEB = 0          # cumulative engaging-rate thresholds
C_CS = 1
C_VR = 2
WEB_MU = 3
WEB_SIGMA = 4
WEB_PLO = 5        # Phi((ln a_low - mu) / sigma)
WEB_PSPAN = 6      # truncated-normal mass
WEB_MEAN_IAT = 7
CS_BITS = 8        # N * S_cs
CS_LAMBDA = 9
VR_BITS = 10
VR_LAMBDA = 11
X_LOW = 12
X_SPAN = 13        # 1 - (a_low / a_up) ** alpha
X_NEG_INV_ALPHA = 14
T_LOW = 15
T_SPAN = 16
T_NEG_INV_ALPHA = 17
N_FLOAT = 18

# integer parameters
I_NCS = 0
I_NVR = 1
I_SLOT = 2
N_INT = 3

KIND_WEB = 0
KIND_CS = 1
KIND_VR = 2
KIND_UHD = 3
KIND_NAMES = ("web", "cs", "vr", "uhd")
