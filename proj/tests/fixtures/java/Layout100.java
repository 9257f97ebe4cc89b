package demo.layout;

import java.util.List;

/** Layout sample: café → résumé. */
public class Layout {
  static {
      int v0 = 946 +  7;
      int v1 = 194 +  2;
      String s2 = "a b\tc";
  	// note 3	spaced  out
  	int v3 = 551 +  0;
      // note 4	spaced  out
      int v4 = 665 +  2;
      // note 5	spaced  out

      String s5 = "a b\tc";
      String s6 = "a b\tc";
  	// note 7	spaced  out
  	int v7 = 4 +  1;
  	int v8 = 564 +  1;
      String s9 = "a b\tc";
  	int v10 = 71 +  9;
      String s11 = "a b\tc";
      String s12 = "a b\tc";
      String s13 = "a b\tc";

      String s14 = "a b\tc";
      String s15 = "a b\tc";

  	String s16 = "a b\tc";

      String s17 = "a b\tc";


  	String s18 = "a b\tc";
      // note 19	spaced  out
   	


  	int v19 = 994 +  9;
      int v20 = 215 +  2;
      int v21 = 657 +  9;

  	int v22 = 791 +  9;
  	int v23 = 75 +  1;

      int v24 = 380 +  9;
      int v25 = 495 +  9;

      // note 26	spaced  out
      int v26 = 742 +  3;
   	
      // note 27	spaced  out
      int v27 = 80 +  6;

  	// note 28	spaced  out
      String s28 = "a b\tc";
      int v29 = 502 +  4;
      // note 30	spaced  out
  	String s30 = "a b\tc";
      int v31 = 630 +  9;

      String s32 = "a b\tc";

  	int v33 = 288 +  5;
      // note 34	spaced  out

      int v34 = 750 +  8;
  	// note 35	spaced  out

      String s35 = "a b\tc";
  	String s36 = "a b\tc";
      // note 37	spaced  out
      String s37 = "a b\tc";
  	String s38 = "a b\tc";
      // note 39	spaced  out
      String s39 = "a b\tc";
      String s40 = "a b\tc";
      String s41 = "a b\tc";
      // note 42	spaced  out
      String s42 = "a b\tc";
      String s43 = "a b\tc";
      // note 44	spaced  out
      int v44 = 623 +  1;

      String s45 = "a b\tc";
      String s46 = "a b\tc";
      String s47 = "a b\tc";
      int v48 = 85 +  8;
  	String s49 = "a b\tc";
      // note 50	spaced  out
      int v50 = 509 +  9;
      // note 51	spaced  out
      String s51 = "a b\tc";

      // note 52	spaced  out
      int v52 = 510 +  3;
  }
}
