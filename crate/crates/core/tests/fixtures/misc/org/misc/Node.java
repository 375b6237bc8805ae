package org.misc;

public class Node {
    Node next;
    int weight;

    public Node(Node next, int weight) {
        this.next = next;
        this.weight = weight;
    }

    /**
     * Total weight of the chain, visiting at most cap successors.
     */
    public int chainWeight(int cap) {
        if (this.next == null) {
            return this.weight;
        }
        if (cap <= 0) {
            return 0;
        }
        return this.weight + this.next.chainWeight(cap - 1);
    }
}
