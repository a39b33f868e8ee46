#!/usr/bin/env python3
"""Dissect capture files with scapy and count malformed packets.

Checks every record: Ethernet carrying ARP or IPv4, IPv4 header checksum,
TCP checksum, and for port 502 a Modbus ADU whose MBAP length matches and
which scapy decodes without leftover bytes. Timestamps must not go
backwards.

Prints one JSON object per file and exits 1 if anything was malformed.
"""

import argparse
import json
import sys

from scapy.all import ARP, IP, TCP, Ether, PcapReader, Padding, Raw
from scapy.contrib.modbus import ModbusADURequest, ModbusADUResponse


def ip_checksum_ok(ip_bytes):
    p = IP(ip_bytes)
    want = p.chksum
    del p.chksum
    return IP(bytes(p)).chksum == want


def tcp_checksum_ok(ip_bytes):
    p = IP(ip_bytes)
    want = p[TCP].chksum
    del p[TCP].chksum
    return IP(bytes(p))[TCP].chksum == want


def check_packet(pkt):
    if not pkt.haslayer(Ether):
        return "no Ethernet layer"
    if pkt.haslayer(ARP):
        if pkt[ARP].haslayer(Raw):
            return "trailing bytes after ARP"
        return None
    if not pkt.haslayer(IP):
        return "ethertype 0x%04x is neither ARP nor IPv4" % pkt[Ether].type
    ip = pkt[IP]
    raw_ip = bytes(ip)[: ip.len]
    if len(raw_ip) != ip.len:
        return "IPv4 truncated"
    if not ip_checksum_ok(raw_ip):
        return "bad IPv4 checksum"
    if not pkt.haslayer(TCP):
        return "IPv4 without TCP"
    if not tcp_checksum_ok(raw_ip):
        return "bad TCP checksum"
    tcp = IP(raw_ip)[TCP]
    payload = bytes(tcp.payload)
    if not payload:
        return None
    if 502 not in (tcp.sport, tcp.dport):
        return "TCP payload on a non-Modbus port"
    adu_cls = ModbusADURequest if tcp.dport == 502 else ModbusADUResponse
    adu = adu_cls(payload)
    if len(payload) < 8 or adu.len != len(payload) - 6 or adu.protoId != 0:
        return "MBAP length or protocol id mismatch"
    if adu.haslayer(Raw) and not adu.haslayer(Padding):
        return "Modbus PDU not fully decoded"
    return None


def check_file(path):
    summary = {"file": path, "packets": 0, "arp": 0, "tcp": 0, "modbus": 0, "malformed": 0, "errors": []}
    last = None
    with PcapReader(path) as reader:
        for i, pkt in enumerate(reader):
            summary["packets"] += 1
            ts = float(pkt.time)
            problem = None
            if last is not None and ts < last:
                problem = "timestamp went backwards"
            last = ts
            if problem is None:
                try:
                    problem = check_packet(pkt)
                except Exception as exc:  # scapy raises assorted types on garbage
                    problem = "dissector error: %s" % exc
            if pkt.haslayer(ARP):
                summary["arp"] += 1
            if pkt.haslayer(TCP):
                summary["tcp"] += 1
                if len(pkt[TCP].payload) and 502 in (pkt[TCP].sport, pkt[TCP].dport):
                    summary["modbus"] += 1
            if problem:
                summary["malformed"] += 1
                if len(summary["errors"]) < 10:
                    summary["errors"].append({"index": i, "problem": problem})
    return summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("pcap", nargs="+")
    args = ap.parse_args()
    bad = False
    for path in args.pcap:
        s = check_file(path)
        print(json.dumps(s))
        bad = bad or s["malformed"] > 0 or s["packets"] == 0
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
