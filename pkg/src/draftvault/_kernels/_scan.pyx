# cython: boundscheck=False, wraparound=False
"""Compiled scan kernels.

Semantics must stay byte-identical to ``_scan_py``; the parity tests
compare the two on randomized streams.  The compiled version exists
because full crash sweeps re-scan every prefix of a journal, which is
quadratic in file size and dominated by this loop; checksums go through
zlib's C entry point directly so the hot loop allocates nothing.
"""
import zlib

cdef extern from "zlib.h":
    unsigned long c_crc32 "crc32"(unsigned long crc, const unsigned char* buf, unsigned int length) nogil

IMPLEMENTATION = "c"

cdef Py_ssize_t HEADER_LEN = 6
cdef unsigned int FORMAT_VERSION = 1


cdef inline unsigned int _le32(const unsigned char* p):
    return (<unsigned int>p[0]) | (<unsigned int>p[1]) << 8 | \
           (<unsigned int>p[2]) << 16 | (<unsigned int>p[3]) << 24


cdef inline unsigned int _le16(const unsigned char* p):
    return (<unsigned int>p[0]) | (<unsigned int>p[1]) << 8


cdef inline unsigned int _crc(const unsigned char* p, Py_ssize_t start, Py_ssize_t end):
    return <unsigned int>(c_crc32(0, p + start, <unsigned int>(end - start)) & 0xFFFFFFFF)


cdef int _check_header(bytes data, bytes magic) except -1:
    if len(data) < HEADER_LEN or data[:4] != magic:
        raise ValueError("bad magic")
    cdef const unsigned char* p = data
    if _le16(p + 4) != FORMAT_VERSION:
        raise ValueError("unsupported format version %d" % _le16(p + 4))
    return 0


def scan_journal(bytes data):
    _check_header(data, b"TCGJ")
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t pos = HEADER_LEN, body_end
    cdef Py_ssize_t valid_end = HEADER_LEN
    cdef unsigned int step_no, flag, kind, plen, crc_stored
    steps = []
    pending = []
    while True:
        if pos + 11 > n:
            break
        step_no = _le32(p + pos)
        flag = p[pos + 4]
        kind = _le16(p + pos + 5)
        plen = _le32(p + pos + 7)
        if flag > 2:
            break
        if flag == 2 and (kind != 0 or plen != 0):
            break
        body_end = pos + 11 + plen
        if body_end + 4 > n:
            break
        crc_stored = _le32(p + body_end)
        if _crc(p, pos, body_end) != crc_stored:
            break
        if step_no != <unsigned int>(len(steps) + 1):
            break
        if flag == 2:
            if not pending:
                break
            steps.append((step_no, pending))
            pending = []
            valid_end = body_end + 4
        else:
            pending.append((flag, kind, data[pos + 11:body_end]))
        pos = body_end + 4
    return steps, valid_end


def scan_journal_valid(bytes data, Py_ssize_t end=-1):
    """Validate-only twin of scan_journal over data[:end]: returns
    (complete_step_count, valid_end) without materializing records."""
    _check_header(data, b"TCGJ")
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    if 0 <= end < n:
        n = end
    cdef Py_ssize_t pos = HEADER_LEN, body_end
    cdef Py_ssize_t valid_end = HEADER_LEN
    cdef unsigned int step_no, flag, kind, plen, crc_stored
    cdef Py_ssize_t count = 0, pending = 0
    while True:
        if pos + 11 > n:
            break
        step_no = _le32(p + pos)
        flag = p[pos + 4]
        kind = _le16(p + pos + 5)
        plen = _le32(p + pos + 7)
        if flag > 2:
            break
        if flag == 2 and (kind != 0 or plen != 0):
            break
        body_end = pos + 11 + plen
        if body_end + 4 > n:
            break
        crc_stored = _le32(p + body_end)
        if _crc(p, pos, body_end) != crc_stored:
            break
        if step_no != <unsigned int>(count + 1):
            break
        if flag == 2:
            if pending == 0:
                break
            count += 1
            pending = 0
            valid_end = body_end + 4
        else:
            pending += 1
        pos = body_end + 4
    return count, valid_end


def scan_blocks(bytes data):
    _check_header(data, b"TCGP")
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t pos = HEADER_LEN, body_end
    cdef unsigned int blen, crc_stored
    blobs = []
    while True:
        if pos + 4 > n:
            break
        blen = _le32(p + pos)
        body_end = pos + 4 + blen
        if body_end + 4 > n:
            break
        crc_stored = _le32(p + body_end)
        if _crc(p, pos, body_end) != crc_stored:
            break
        blobs.append(data[pos + 4:body_end])
        pos = body_end + 4
    return blobs, pos


def scan_tlv(bytes data):
    _check_header(data, b"TCGE")
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t pos = HEADER_LEN, body_end
    cdef unsigned int stype, slen, crc_stored
    sections = []
    while True:
        if pos + 5 > n:
            break
        stype = p[pos]
        slen = _le32(p + pos + 1)
        body_end = pos + 5 + slen
        if body_end + 4 > n:
            break
        crc_stored = _le32(p + body_end)
        if _crc(p, pos, body_end) != crc_stored:
            break
        sections.append((stype, data[pos + 5:body_end]))
        pos = body_end + 4
    return sections, pos
