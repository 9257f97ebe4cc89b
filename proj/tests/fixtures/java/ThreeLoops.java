import java.util.List;

class Counter {
    // counts things three different ways
    int count(List<String> words, int limit) {
        int n = 0;
        for (int i = 0; i < limit; i++) {
            n++;
        }
        for (String w : words) {
            if (w.isEmpty()) {
                continue;
            }
            n += w.length();
        }
        while (n > 100) {
            n = n / 2;
        }
        return n;
    }
}
